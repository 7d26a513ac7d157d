//! Latent semantic analysis: rank-r factorization `A ≈ Ū V̄` of a TF-IDF
//! matrix with `Ū = U √S` and `V̄ = √S Vᵀ`.
//!
//! Two solvers are provided. [`SvdMethod::Dense`] runs a full SVD of the
//! densified matrix and serves as the reference. [`SvdMethod::Randomized`]
//! is a Gaussian range finder followed by subspace (power) iteration and a
//! small dense SVD; it works on the sparse matrix directly.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;
use crate::sparse::CsrMatrix;

/// Singular values below `RELATIVE_CUTOFF * S[0]` are treated as zero.
pub const RELATIVE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvdMethod {
    Dense,
    Randomized(RandomizedCfg),
}

impl Default for SvdMethod {
    fn default() -> Self {
        SvdMethod::Randomized(RandomizedCfg::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizedCfg {
    /// Extra sample columns beyond `k`.
    pub oversample: usize,
    /// Minimum number of power iterations.
    pub power_iters: usize,
    /// Keep iterating until the top-k singular values change by less than
    /// this relative amount between sweeps.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for RandomizedCfg {
    fn default() -> Self {
        RandomizedCfg {
            oversample: 10,
            power_iters: 2,
            tol: 1e-8,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    /// `Ū`, one row per training document (`n x r`).
    pub doc_embeddings: DMatrix<f64>,
    /// `V̄` (`r x |V|`).
    pub term_map: DMatrix<f64>,
    /// Non-increasing, strictly positive.
    pub singular_values: DVector<f64>,
}

struct Factors {
    u: DMatrix<f64>,
    s: Vec<f64>,
    vt: DMatrix<f64>,
}

fn sorted_svd(m: DMatrix<f64>) -> Factors {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Factors {
        u: DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]),
        s: order.iter().map(|&j| svd.singular_values[j]).collect(),
        vt: DMatrix::from_fn(order.len(), vt.ncols(), |i, j| vt[(order[i], j)]),
    }
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

fn randomized(a: &CsrMatrix, k: usize, cfg: &RandomizedCfg, seed: u64) -> Factors {
    let (n, v) = (a.nrows(), a.ncols());
    let l = (k + cfg.oversample).min(n).min(v);
    let mut rng = rng::stream(seed, "lsa.range", 0);
    let omega = DMatrix::from_fn(v, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(a.mul_dense(&omega));

    // With Z = Aᵀ Q, the singular values of QᵀA are the square roots of the
    // eigenvalues of ZᵀZ, which is cheap to form for the convergence test.
    let mut prev: Option<Vec<f64>> = None;
    let mut it = 0;
    loop {
        let z = a.tr_mul_dense(&q);
        if it >= cfg.power_iters {
            let mut ev: Vec<f64> = (z.transpose() * &z)
                .symmetric_eigenvalues()
                .iter()
                .map(|x| x.max(0.0).sqrt())
                .collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            let converged = prev.as_ref().is_some_and(|p| {
                let floor = RELATIVE_CUTOFF * ev[0];
                p.iter()
                    .zip(&ev)
                    .take(k)
                    .all(|(a, b)| (a - b).abs() <= cfg.tol * b.max(floor))
            });
            if converged || it >= cfg.max_iters {
                if !converged {
                    log::warn!("randomized SVD stopped after {it} iterations without converging");
                }
                let f = sorted_svd(z.transpose());
                return Factors {
                    u: &q * f.u,
                    s: f.s,
                    vt: f.vt,
                };
            }
            prev = Some(ev);
        }
        q = orthonormal_basis(a.mul_dense(&z));
        it += 1;
    }
}

/// Fit a rank-`min(k, numerical rank)` topic model.
pub fn fit_lsa(a: &CsrMatrix, k: usize, method: SvdMethod, seed: u64) -> Result<TopicModel> {
    if k < 1 {
        return Err(Error::InvalidArgument("topic rank k must be at least 1".into()));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::EmptyInput("document-term matrix is empty".into()));
    }
    let k = k.min(a.nrows()).min(a.ncols());
    let mut f = match method {
        SvdMethod::Dense => sorted_svd(a.to_dense()),
        SvdMethod::Randomized(cfg) => randomized(a, k, &cfg, seed),
    };

    let top = f.s.first().copied().unwrap_or(0.0);
    let r = f
        .s
        .iter()
        .take(k)
        .take_while(|&&s| s > 0.0 && s > RELATIVE_CUTOFF * top)
        .count();
    if r == 0 {
        return Err(Error::ZeroRank);
    }

    // Make the largest-magnitude entry of each right singular vector
    // non-negative (first index wins ties).
    for j in 0..r {
        let row = f.vt.row(j);
        let mut best = 0;
        for c in 1..row.len() {
            if row[c].abs() > row[best].abs() {
                best = c;
            }
        }
        if row[best] < 0.0 {
            f.vt.row_mut(j).neg_mut();
            f.u.column_mut(j).neg_mut();
        }
    }

    let sqrt_s: Vec<f64> = f.s[..r].iter().map(|s| s.sqrt()).collect();
    let doc_embeddings = DMatrix::from_fn(a.nrows(), r, |i, j| f.u[(i, j)] * sqrt_s[j]);
    let term_map = DMatrix::from_fn(r, a.ncols(), |i, j| sqrt_s[i] * f.vt[(i, j)]);
    Ok(TopicModel {
        doc_embeddings,
        term_map,
        singular_values: DVector::from_column_slice(&f.s[..r]),
    })
}

impl TopicModel {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_embeddings.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.term_map.ncols()
    }

    /// `Ū V̄`, the rank-r approximation of the training matrix.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.doc_embeddings * &self.term_map
    }

    /// Fold rows of `w` into the topic space: `w Vᵀ S^{-1/2}`. A training
    /// row maps onto its own row of `Ū`.
    pub fn embed_docs(&self, w: &CsrMatrix) -> Result<DMatrix<f64>> {
        self.check_vocab(w)?;
        let mut out = w.mul_dense(&self.term_map.transpose());
        for (j, s) in self.singular_values.iter().enumerate() {
            out.column_mut(j).scale_mut(1.0 / s);
        }
        Ok(out)
    }

    /// Topic-distribution features `V̄ w` for each row `w`.
    pub fn topic_features(&self, w: &CsrMatrix) -> Result<DMatrix<f64>> {
        self.check_vocab(w)?;
        Ok(w.mul_dense(&self.term_map.transpose()))
    }

    fn check_vocab(&self, w: &CsrMatrix) -> Result<()> {
        if w.ncols() != self.n_terms() {
            return Err(Error::VocabularyMismatch(format!(
                "rows have {} columns, model has {} terms",
                w.ncols(),
                self.n_terms()
            )));
        }
        Ok(())
    }

    /// Header `(n, r, |V|)` as little-endian u64, then `Ū` and `V̄`
    /// row-major and `S`, all as little-endian f64.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for d in [self.n_docs(), self.rank(), self.n_terms()] {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for m in [&self.doc_embeddings, &self.term_map] {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    w.write_all(&m[(i, j)].to_le_bytes())?;
                }
            }
        }
        for s in self.singular_values.iter() {
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> std::io::Result<Self> {
        let mut u64_buf = [0u8; 8];
        let mut dims = [0usize; 3];
        for d in &mut dims {
            r.read_exact(&mut u64_buf)?;
            *d = usize::try_from(u64::from_le_bytes(u64_buf))
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        }
        let [n, rank, v] = dims;
        let mut read_f64 = || -> std::io::Result<f64> {
            r.read_exact(&mut u64_buf)?;
            Ok(f64::from_le_bytes(u64_buf))
        };
        let mut read_matrix = |rows: usize, cols: usize| -> std::io::Result<DMatrix<f64>> {
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(read_f64()?);
            }
            Ok(DMatrix::from_row_slice(rows, cols, &data))
        };
        let doc_embeddings = read_matrix(n, rank)?;
        let term_map = read_matrix(rank, v)?;
        let s = read_matrix(rank, 1)?;
        Ok(TopicModel {
            doc_embeddings,
            term_map,
            singular_values: DVector::from_column_slice(s.as_slice()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    #[test]
    fn identity_is_reproduced_exactly() {
        let a = CsrMatrix::from_dense(&DMatrix::identity(3, 3));
        for method in [SvdMethod::Dense, SvdMethod::default()] {
            let m = fit_lsa(&a, 3, method, 1).unwrap();
            assert_eq!(m.rank(), 3);
            for s in m.singular_values.iter() {
                assert!((s - 1.0).abs() < 1e-12);
            }
            assert!(max_abs(&(m.reconstruct() - DMatrix::<f64>::identity(3, 3))) < 1e-12);
        }
    }

    #[test]
    fn rank_one_is_truncated() {
        let u = DVector::from_column_slice(&[1.0, 2.0, 2.0]);
        let v = DVector::from_column_slice(&[3.0, 0.0, 4.0, 0.0]);
        let a = CsrMatrix::from_dense(&(&u * v.transpose()));
        for method in [SvdMethod::Dense, SvdMethod::default()] {
            let m = fit_lsa(&a, 2, method, 1).unwrap();
            assert_eq!(m.rank(), 1);
            assert!((m.singular_values[0] - 15.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_rank_and_empty_input() {
        let a = CsrMatrix::from_dense(&DMatrix::identity(2, 2));
        assert!(matches!(
            fit_lsa(&a, 0, SvdMethod::Dense, 0),
            Err(Error::InvalidArgument(_))
        ));
        let empty = CsrMatrix::from_rows(3, vec![]);
        assert!(matches!(
            fit_lsa(&empty, 1, SvdMethod::Dense, 0),
            Err(Error::EmptyInput(_))
        ));
        let zero = CsrMatrix::from_rows(3, vec![vec![], vec![]]);
        assert!(matches!(fit_lsa(&zero, 1, SvdMethod::Dense, 0), Err(Error::ZeroRank)));
    }

    #[test]
    fn sign_convention_makes_largest_entry_non_negative() {
        let d = DMatrix::from_row_slice(3, 3, &[-1.0, 0.2, 0.0, 0.1, -2.0, 0.3, 0.0, 0.0, -0.5]);
        let m = fit_lsa(&CsrMatrix::from_dense(&d), 3, SvdMethod::Dense, 0).unwrap();
        for row in m.term_map.row_iter() {
            let best = row.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(best >= 0.0);
        }
    }

    #[test]
    fn fold_in_of_zero_vector_is_zero() {
        let a = CsrMatrix::from_dense(&DMatrix::identity(3, 3));
        let m = fit_lsa(&a, 2, SvdMethod::Dense, 0).unwrap();
        let z = m.embed_docs(&CsrMatrix::from_rows(3, vec![vec![]])).unwrap();
        assert!(z.iter().all(|x| *x == 0.0));
        assert!(matches!(
            m.embed_docs(&CsrMatrix::from_rows(4, vec![vec![]])),
            Err(Error::VocabularyMismatch(_))
        ));
    }

    #[test]
    fn binary_round_trip() {
        let d = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 2.0, 1.0]);
        let m = fit_lsa(&CsrMatrix::from_dense(&d), 2, SvdMethod::Dense, 0).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (3 + 2 * 2 + 2 * 3 + 2));
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        assert_eq!(TopicModel::read_from(&buf[..]).unwrap(), m);
    }
}
