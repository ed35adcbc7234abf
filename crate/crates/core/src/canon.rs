//! Canonical ordering and permutation-invariant table equality.

use crate::table::{Schema, Table};

/// Sorts columns by name and rows lexicographically under the cell total
/// order. Idempotent.
pub fn canonicalize(t: &Table) -> Table {
    let mut order: Vec<usize> = (0..t.num_cols()).collect();
    order.sort_by(|&a, &b| t.columns()[a].name.cmp(&t.columns()[b].name));

    let columns = order.iter().map(|&j| t.columns()[j].clone()).collect();
    let mut rows: Vec<Vec<_>> = t
        .rows()
        .iter()
        .map(|r| order.iter().map(|&j| r[j].clone()).collect())
        .collect();
    rows.sort();

    let schema = Schema { table_name: t.name().to_string(), description: t.schema().description.clone(), columns };
    Table::new(schema, rows).expect("permuting a valid table keeps it valid")
}

/// Exact match up to row and column permutations. Table names, descriptions
/// and dtype labels are not compared; cells compare numerically across
/// int/real.
pub fn tables_equal(a: &Table, b: &Table) -> bool {
    if a.num_cols() != b.num_cols() || a.num_rows() != b.num_rows() {
        return false;
    }
    let ca = canonicalize(a);
    let cb = canonicalize(b);
    ca.columns().iter().zip(cb.columns()).all(|(x, y)| x.name == y.name) && ca.rows() == cb.rows()
}
