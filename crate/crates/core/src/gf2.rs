//! Bit-packed dense matrices over GF(2).

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64).max(1);
        BitMatrix { rows, cols, words, data: vec![0; rows * words] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        let w = &mut self.data[r * self.words + c / 64];
        if bit {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1 << (c % 64);
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let w = self.words;
        for k in 0..w {
            let s = self.data[src * w + k];
            self.data[dst * w + k] ^= s;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words;
        for k in 0..w {
            self.data.swap(a * w + k, b * w + k);
        }
    }

    /// Reduced row echelon form in place; returns pivot columns in order.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c)) else {
                continue;
            };
            self.swap_rows(p, r);
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    self.xor_row_into(r, i);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }
}

/// A factored linear system `A x = b` over GF(2), reusable for many
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct Gf2Solver {
    // [A | I] reduced so that the left block is in RREF; the right block
    // records the row operations applied.
    reduced: BitMatrix,
    pivots: Vec<usize>,
    nvars: usize,
    neqs: usize,
}

impl Gf2Solver {
    pub fn new(a: &BitMatrix) -> Self {
        let (neqs, nvars) = (a.rows(), a.cols());
        let mut aug = BitMatrix::zeros(neqs, nvars + neqs);
        for r in 0..neqs {
            for c in 0..nvars {
                if a.get(r, c) {
                    aug.set(r, c, true);
                }
            }
            aug.set(r, nvars + r, true);
        }
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..nvars {
            if r == neqs {
                break;
            }
            let Some(p) = (r..neqs).find(|&i| aug.get(i, c)) else {
                continue;
            };
            aug.swap_rows(p, r);
            for i in 0..neqs {
                if i != r && aug.get(i, c) {
                    aug.xor_row_into(r, i);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Gf2Solver { reduced: aug, pivots, nvars, neqs }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Solve with all free variables set to zero. `None` if inconsistent.
    pub fn solve(&self, b: &[bool]) -> Option<Vec<bool>> {
        assert_eq!(b.len(), self.neqs);
        // transformed rhs: row r of E*b where E is the right block
        let tb: Vec<bool> = (0..self.neqs)
            .map(|r| {
                let row = self.reduced.row(r);
                let mut acc = false;
                for (i, &bi) in b.iter().enumerate() {
                    if bi {
                        let c = self.nvars + i;
                        acc ^= (row[c / 64] >> (c % 64)) & 1 == 1;
                    }
                }
                acc
            })
            .collect();
        if tb[self.pivots.len()..].iter().any(|&x| x) {
            return None;
        }
        let mut x = vec![false; self.nvars];
        for (r, &c) in self.pivots.iter().enumerate() {
            x[c] = tb[r];
        }
        Some(x)
    }
}
