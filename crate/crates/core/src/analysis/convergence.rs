//! Modified OTOCs of several orders side by side with the exact trace.

use serde::Serialize;

use crate::protocol::{DatasetMetadata, MeasurementDataset, OtocEstimator, OtocPoint};
use nalgebra::DMatrix;

use crate::spin::{check_site, DenseOperator, OtocOracle, Pauli, Propagator, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub order: usize,
    pub points: Vec<OtocPoint>,
    /// `max_t |O_n(t) - O(t)|`
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub site: usize,
    pub times: Vec<f64>,
    pub exact: Vec<f64>,
    pub rows: Vec<ConvergenceRow>,
}

/// Exact OTOC `[site][time]` for the campaign's Hamiltonian and `V`.
pub fn exact_series(meta: &DatasetMetadata, sites: &[usize]) -> Result<Vec<Vec<f64>>> {
    let prop = Propagator::from_spec(&meta.hamiltonian)?;
    let v = DenseOperator::pauli(meta.n_spins(), meta.v_site, meta.v_pauli)?;
    let oracle = OtocOracle::new(&prop, &v)?;
    sites.iter().map(|&s| oracle.series(s, &meta.times)).collect()
}

pub fn convergence_study(data: &MeasurementDataset, orders: &[usize], site: usize) -> Result<ConvergenceTable> {
    let meta = data.metadata();
    let exact = exact_series(meta, &[site])?.remove(0);
    let est = OtocEstimator::new(data);
    let rows = orders
        .iter()
        .map(|&order| {
            let points = meta.times.iter().map(|&t| est.modified_otoc(order, site, t)).collect::<Result<Vec<_>>>()?;
            let max_deviation =
                points.iter().zip(&exact).map(|(p, e)| (p.value - e).abs()).fold(0.0, f64::max);
            Ok(ConvergenceRow { order, points, max_deviation })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { site, times: meta.times.clone(), exact, rows })
}

/// `y <- y + 1_s (x) Tr_s y` on one site: the contraction left by a site that
/// only ever starts in `|0>`.
fn add_traced_site(y: &mut DMatrix<C64>, site: usize) {
    let m = 1usize << (site - 1);
    let d = y.nrows();
    for i in (0..d).filter(|i| i & m == 0) {
        for j in (0..d).filter(|j| j & m == 0) {
            let tr = y[(i, j)] + y[(i | m, j | m)];
            y[(i, j)] += tr;
            y[(i | m, j | m)] += tr;
        }
    }
}

fn contract(x: &DMatrix<C64>, y: &DMatrix<C64>, order: usize, n_spins: usize) -> f64 {
    let mut y = y.clone();
    for site in order + 1..=n_spins {
        add_traced_site(&mut y, site);
    }
    // Tr[x y] without forming the product
    x.iter().zip(y.transpose().iter()).map(|(a, b)| a * b).sum::<C64>().re
}

/// The value the order-`order` modified OTOC converges to for infinitely
/// many unitaries and shots, from the second Haar moment of the local
/// rotations. Each site `i <= order` contributes a swap, every other site
/// the projector-like `1 + swap`, so
/// `O_n = Tr[X Phi(V X V)] / Tr[X Phi(X)]` with `X = W(t)` and `Phi` adding
/// the partial trace on sites beyond `order`. Equals the exact OTOC at
/// `order = N`.
pub fn modified_otoc_limit(
    prop: &Propagator,
    v_op: &DenseOperator,
    w_site: usize,
    order: usize,
    times: &[f64],
) -> Result<Vec<f64>> {
    let d = prop.dim();
    let n = d.trailing_zeros() as usize;
    check_site(n, w_site)?;
    if v_op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: v_op.dim() });
    }
    if order > n {
        return Err(Error::invalid(format!("order {order} exceeds {n} spins")));
    }
    let w = DenseOperator::pauli(n, w_site, Pauli::X)?;
    let v = v_op.matrix();
    times
        .iter()
        .map(|&t| {
            let u = prop.unitary(t);
            let x = u.ad_mul(&(w.matrix() * &u));
            let y = v * &x * v;
            Ok(contract(&x, &y, order, n) / contract(&x, &x, order, n))
        })
        .collect()
}
