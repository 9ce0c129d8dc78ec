use serde::{Deserialize, Serialize};

use super::FusionError;

/// A finite group given by its multiplication table.
///
/// Elements are `0..order`; `table[g][h]` is the index of `g·h`. The identity
/// and inverses are recovered from the table when it is validated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self, FusionError> {
        let n = table.len();
        if n == 0 {
            return Err(FusionError::InvalidGroupTable("empty table".into()));
        }
        for (g, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(FusionError::InvalidGroupTable(format!(
                    "row {g} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&v| v >= n) {
                return Err(FusionError::InvalidGroupTable(format!(
                    "entry {bad} in row {g} is out of range"
                )));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| FusionError::InvalidGroupTable("no identity element".into()))?;
        let mut inverse = Vec::with_capacity(n);
        for g in 0..n {
            let inv = (0..n)
                .find(|&h| table[g][h] == identity && table[h][g] == identity)
                .ok_or_else(|| {
                    FusionError::InvalidGroupTable(format!("element {g} has no inverse"))
                })?;
            inverse.push(inv);
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(FusionError::InvalidGroupTable(format!(
                            "associativity fails on ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            table,
            identity,
            inverse,
        })
    }

    /// The cyclic group ℤ/n with `g·h = (g + h) mod n`.
    pub fn cyclic(n: usize) -> Result<Self, FusionError> {
        let table = (0..n)
            .map(|g| (0..n).map(|h| (g + h) % n).collect())
            .collect();
        Self::from_table(table)
    }

    /// The symmetric group S_3, elements ordered lexicographically as
    /// permutations of `{0, 1, 2}`, composition `(g·h)(i) = g(h(i))`.
    pub fn symmetric3() -> Self {
        let perms: Vec<[usize; 3]> = vec![
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
        let table = perms
            .iter()
            .map(|g| {
                perms
                    .iter()
                    .map(|h| index([g[h[0]], g[h[1]], g[h[2]]]))
                    .collect()
            })
            .collect();
        Self::from_table(table).expect("S3 table is a group")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }
}

impl TryFrom<Vec<Vec<usize>>> for FiniteGroup {
    type Error = FusionError;

    fn try_from(table: Vec<Vec<usize>>) -> Result<Self, Self::Error> {
        Self::from_table(table)
    }
}

impl From<FiniteGroup> for Vec<Vec<usize>> {
    fn from(g: FiniteGroup) -> Self {
        g.table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_group_inverse() {
        let z3 = FiniteGroup::cyclic(3).unwrap();
        assert_eq!(z3.identity(), 0);
        assert_eq!(z3.inv(1), 2);
        assert_eq!(z3.mul(1, 1), 2);
    }

    #[test]
    fn s3_is_nonabelian() {
        let s3 = FiniteGroup::symmetric3();
        assert_eq!(s3.order(), 6);
        assert_eq!(s3.identity(), 0);
        let noncommuting = (0..6).any(|g| (0..6).any(|h| s3.mul(g, h) != s3.mul(h, g)));
        assert!(noncommuting);
        for g in 0..6 {
            assert_eq!(s3.mul(g, s3.inv(g)), 0);
        }
    }

    #[test]
    fn rejects_non_groups() {
        assert!(FiniteGroup::from_table(vec![]).is_err());
        assert!(FiniteGroup::from_table(vec![vec![0, 1], vec![1, 1]]).is_err());
        assert!(FiniteGroup::from_table(vec![vec![0, 2], vec![1, 0]]).is_err());
        // a Latin square without associativity
        let quasi = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(FiniteGroup::from_table(quasi).is_err());
    }
}
