//! The InfoNCE potential: loss, Gibbs probabilities over candidates, exact
//! Euclidean and Riemannian gradients, the per-anchor Hessian decomposition
//! beta^2 Cov + beta (E[H] - H_pos), the limiting potential U0, and the
//! scaled-loss gap L/beta - U0.
//!
//! All similarity functions extend smoothly off the sphere, so the same
//! formulas support the ambient finite-difference oracles in
//! [`crate::diagnostics`]. Everything here is pure and reentrant.

use crate::error::{Error, Result};
use crate::geometry::{dot, Configuration, TangentVector, UnitVector};

/// Tie tolerance for argmax candidate sets K_i(Z).
pub const ARGMAX_TIE_TOL: f64 = 1e-12;

/// Similarity functions. Both are bounded by S_max = 1 and C^2 in the
/// ambient coordinates of either argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityKind {
    /// Raw inner product a.b; coincides with cosine similarity on unit
    /// vectors and stays linear off the sphere.
    Cosine,
    /// RBF kernel exp(-||a - b||^2 / (2 sigma^2)), sigma > 0.
    Gaussian { sigma: f64 },
}

impl SimilarityKind {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "gaussian bandwidth must be positive, got {sigma}"
            )));
        }
        Ok(Self::Gaussian { sigma })
    }

    /// Similarity of two ambient (not necessarily unit) vectors.
    pub fn value(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Self::Cosine => dot(a, b),
            Self::Gaussian { sigma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    /// Gradient of sim(a, b) with respect to the first argument.
    pub fn grad_first(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match *self {
            Self::Cosine => b.to_vec(),
            Self::Gaussian { sigma } => {
                let s = self.value(a, b);
                let inv = 1.0 / (sigma * sigma);
                a.iter()
                    .zip(b)
                    .map(|(ai, bi)| s * (bi - ai) * inv)
                    .collect()
            }
        }
    }

    /// Gradient of sim(a, b) with respect to the second argument.
    pub fn grad_second(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match *self {
            Self::Cosine => a.to_vec(),
            Self::Gaussian { sigma } => {
                let s = self.value(a, b);
                let inv = 1.0 / (sigma * sigma);
                a.iter()
                    .zip(b)
                    .map(|(ai, bi)| s * (ai - bi) * inv)
                    .collect()
            }
        }
    }

    /// Hessian of sim(a, b) with respect to the first argument. Zero for the
    /// inner product; for the RBF kernel
    /// s * [ (a-b)(a-b)^T / sigma^4 - I / sigma^2 ].
    pub fn hessian_first(&self, a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
        let d = a.len();
        match *self {
            Self::Cosine => vec![vec![0.0; d]; d],
            Self::Gaussian { sigma } => {
                let s = self.value(a, b);
                let s2 = sigma * sigma;
                let delta: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                let mut h = vec![vec![0.0; d]; d];
                for r in 0..d {
                    for c in 0..d {
                        let mut v = s * delta[r] * delta[c] / (s2 * s2);
                        if r == c {
                            v -= s / s2;
                        }
                        h[r][c] = v;
                    }
                }
                h
            }
        }
    }
}

/// The positive-pair index set P. candidates(i) is every index except i,
/// including the positive, exactly as the partition sum is written.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pairs: Vec<(usize, usize)>,
    n: usize,
}

impl PairSet {
    pub fn new(pairs: Vec<(usize, usize)>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewPoints { n });
        }
        if pairs.is_empty() {
            return Err(Error::InvalidInstance(
                "a pair set needs at least one positive pair".into(),
            ));
        }
        for &(i, j) in &pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidInstance(format!(
                    "pair ({i}, {j}) out of range for {n} points"
                )));
            }
            if i == j {
                return Err(Error::InvalidInstance(format!(
                    "pair ({i}, {j}) uses the anchor as its own positive"
                )));
            }
        }
        Ok(Self { pairs, n })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.contains(&(i, j))
    }

    /// Candidate indices of anchor i: all k != i in ascending order.
    pub fn candidates(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&k| k != i)
    }
}

/// Loss plus both gradient views of one evaluation.
#[derive(Debug, Clone)]
pub struct PotentialEval {
    /// L(Z, beta) in nats.
    pub loss: f64,
    /// d(loss)/d(z_m) in ambient coordinates, one row per point.
    pub euclidean_grad: Vec<Vec<f64>>,
    /// Per-point tangent projection of the Euclidean gradient.
    pub riemannian_grad: TangentVector,
}

/// Similarity row of one anchor: s_ik for every candidate, with the running
/// max and its lowest-index witness.
struct AnchorRow {
    /// s_ik indexed by k; the k = i slot is NaN and never read.
    sims: Vec<f64>,
    smax: f64,
    /// Lowest-index candidate attaining smax.
    argmax: usize,
}

fn anchor_row(points: &[&[f64]], kind: SimilarityKind, i: usize) -> AnchorRow {
    let n = points.len();
    let mut sims = vec![f64::NAN; n];
    let mut smax = f64::NEG_INFINITY;
    let mut argmax = usize::MAX;
    for k in 0..n {
        if k == i {
            continue;
        }
        let s = kind.value(points[i], points[k]);
        sims[k] = s;
        if s > smax {
            smax = s;
            argmax = k;
        }
    }
    AnchorRow { sims, smax, argmax }
}

impl AnchorRow {
    /// ln sum_k exp(beta (s_ik - smax)); exponents are all <= 0, so this is
    /// finite and in [0, ln(N-1)] for every beta >= 0.
    fn logsumexp_shifted(&self, beta: f64, i: usize) -> f64 {
        let mut sum = 0.0;
        for (k, &s) in self.sims.iter().enumerate() {
            if k == i {
                continue;
            }
            sum += (beta * (s - self.smax)).exp();
        }
        sum.ln()
    }

    /// Gibbs probabilities p_i(k | beta) indexed by k (the k = i slot is 0).
    fn probs(&self, beta: f64, i: usize) -> Vec<f64> {
        let n = self.sims.len();
        let mut p = vec![0.0; n];
        let mut sum = 0.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let w = (beta * (self.sims[k] - self.smax)).exp();
            p[k] = w;
            sum += w;
        }
        for v in &mut p {
            *v /= sum;
        }
        p
    }

    /// Size of the argmax candidate set K_i(Z) under [`ARGMAX_TIE_TOL`] ties.
    fn argmax_count(&self, i: usize) -> usize {
        self.sims
            .iter()
            .enumerate()
            .filter(|&(k, &s)| k != i && s >= self.smax - ARGMAX_TIE_TOL)
            .count()
    }
}

fn check_dims(z: &Configuration, pairs: &PairSet) {
    assert_eq!(
        z.n(),
        pairs.n(),
        "pair set indexes {} points but the configuration has {}",
        pairs.n(),
        z.n()
    );
}

/// Similarity of two unit vectors under the given kind.
pub fn similarity(kind: SimilarityKind, a: &UnitVector, b: &UnitVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(kind.value(a.coords(), b.coords()))
}

/// Gibbs probabilities over candidates(i), in ascending candidate order.
/// Computed with max-subtraction, so no beta overflows. beta = 0 gives the
/// uniform distribution.
pub fn softmax_probs(
    z: &Configuration,
    i: usize,
    beta: f64,
    kind: SimilarityKind,
    pairs: &PairSet,
) -> Vec<f64> {
    check_dims(z, pairs);
    assert!(beta >= 0.0, "inverse temperature must be nonnegative");
    let rows = z.rows();
    let row = anchor_row(&rows, kind, i);
    let p = row.probs(beta, i);
    pairs.candidates(i).map(|k| p[k]).collect()
}

pub(crate) fn loss_raw(
    points: &[&[f64]],
    beta: f64,
    kind: SimilarityKind,
    pairs: &PairSet,
) -> f64 {
    let mut total = 0.0;
    for &(i, j) in pairs.pairs() {
        let row = anchor_row(points, kind, i);
        // l_ij = -beta (s_ij - smax) + ln sum exp(beta (s - smax)); both
        // terms are nonnegative by construction.
        total += -beta * (row.sims[j] - row.smax) + row.logsumexp_shifted(beta, i);
    }
    total / pairs.len() as f64
}

/// InfoNCE loss (1/|P|) sum of -ln p_i(j | beta), in nats. Finite and
/// nonnegative for every beta >= 0.
pub fn infonce_loss(z: &Configuration, beta: f64, kind: SimilarityKind, pairs: &PairSet) -> f64 {
    check_dims(z, pairs);
    assert!(beta >= 0.0, "inverse temperature must be nonnegative");
    loss_raw(&z.rows(), beta, kind, pairs)
}

/// Scaled potential F_beta = L(Z, beta) / beta.
pub fn free_energy(z: &Configuration, beta: f64, kind: SimilarityKind, pairs: &PairSet) -> f64 {
    assert!(beta > 0.0, "free energy requires beta > 0");
    infonce_loss(z, beta, kind, pairs) / beta
}

pub(crate) fn grad_raw(
    points: &[&[f64]],
    beta: f64,
    kind: SimilarityKind,
    pairs: &PairSet,
) -> Vec<Vec<f64>> {
    let n = points.len();
    let d = points[0].len();
    let mut grad = vec![vec![0.0; d]; n];
    for &(i, j) in pairs.pairs() {
        let row = anchor_row(points, kind, i);
        let p = row.probs(beta, i);
        // Anchor role: beta (mu_i - grad_1 s_ij).
        let mut mu = vec![0.0; d];
        for k in 0..n {
            if k == i {
                continue;
            }
            let gk = kind.grad_first(points[i], points[k]);
            for (m, g) in mu.iter_mut().zip(&gk) {
                *m += p[k] * g;
            }
        }
        let gj = kind.grad_first(points[i], points[j]);
        for c in 0..d {
            grad[i][c] += beta * (mu[c] - gj[c]);
        }
        // Positive and candidate roles: beta (p_i(m) - [m = j]) grad_2 s_im.
        for m in 0..n {
            if m == i {
                continue;
            }
            let coeff = beta * (p[m] - if m == j { 1.0 } else { 0.0 });
            if coeff == 0.0 {
                continue;
            }
            let gm = kind.grad_second(points[i], points[m]);
            for c in 0..d {
                grad[m][c] += coeff * gm[c];
            }
        }
    }
    let inv = 1.0 / pairs.len() as f64;
    for row in &mut grad {
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
    grad
}

/// Exact gradient of the total loss with respect to every embedding,
/// accounting for anchor, positive and candidate roles, plus its per-point
/// tangent projection.
pub fn infonce_gradient(
    z: &Configuration,
    beta: f64,
    kind: SimilarityKind,
    pairs: &PairSet,
) -> PotentialEval {
    check_dims(z, pairs);
    assert!(beta > 0.0, "gradient evaluation requires beta > 0");
    let rows = z.rows();
    let loss = loss_raw(&rows, beta, kind, pairs);
    let euclidean = grad_raw(&rows, beta, kind, pairs);
    let riemannian = TangentVector::from_projected(
        euclidean
            .iter()
            .zip(z.points())
            .map(|(g, p)| crate::geometry::tangent_project(p, g))
            .collect(),
    );
    PotentialEval {
        loss,
        euclidean_grad: euclidean,
        riemannian_grad: riemannian,
    }
}

pub(crate) fn anchor_grad_raw(
    points: &[&[f64]],
    i: usize,
    j: usize,
    beta: f64,
    kind: SimilarityKind,
) -> Vec<f64> {
    let n = points.len();
    let d = points[0].len();
    let row = anchor_row(points, kind, i);
    let p = row.probs(beta, i);
    let mut mu = vec![0.0; d];
    for k in 0..n {
        if k == i {
            continue;
        }
        let gk = kind.grad_first(points[i], points[k]);
        for (m, g) in mu.iter_mut().zip(&gk) {
            *m += p[k] * g;
        }
    }
    let gj = kind.grad_first(points[i], points[j]);
    mu.iter().zip(&gj).map(|(m, g)| beta * (m - g)).collect()
}

/// Gradient of the single anchor term l_ij with respect to z_i alone:
/// beta (mu_i - grad s_ij). This is the object the anchor Hessian
/// differentiates.
pub fn anchor_gradient(
    z: &Configuration,
    i: usize,
    j: usize,
    beta: f64,
    kind: SimilarityKind,
    pairs: &PairSet,
) -> Result<Vec<f64>> {
    check_dims(z, pairs);
    if !pairs.contains(i, j) {
        return Err(Error::InvalidInstance(format!(
            "({i}, {j}) is not a positive pair"
        )));
    }
    assert!(beta > 0.0, "gradient evaluation requires beta > 0");
    Ok(anchor_grad_raw(&z.rows(), i, j, beta, kind))
}

pub(crate) fn hessian_anchor_raw(
    points: &[&[f64]],
    i: usize,
    j: usize,
    beta: f64,
    kind: SimilarityKind,
) -> Vec<Vec<f64>> {
    let n = points.len();
    let d = points[0].len();
    let row = anchor_row(points, kind, i);
    let p = row.probs(beta, i);

    let grads: Vec<Option<Vec<f64>>> = (0..n)
        .map(|k| {
            if k == i {
                None
            } else {
                Some(kind.grad_first(points[i], points[k]))
            }
        })
        .collect();

    let mut mu = vec![0.0; d];
    for k in 0..n {
        if let Some(g) = &grads[k] {
            for (m, gi) in mu.iter_mut().zip(g) {
                *m += p[k] * gi;
            }
        }
    }

    // Cov = sum_k p_k g_k g_k^T - mu mu^T; exactly symmetric by construction.
    let mut h = vec![vec![0.0; d]; d];
    for k in 0..n {
        if let Some(g) = &grads[k] {
            for r in 0..d {
                for c in 0..d {
                    h[r][c] += p[k] * g[r] * g[c];
                }
            }
        }
    }
    for r in 0..d {
        for c in 0..d {
            h[r][c] = beta * beta * (h[r][c] - mu[r] * mu[c]);
        }
    }

    // beta (E[H_ik] - H_ij). The inner-product kind has H_ik = 0, so this
    // whole term vanishes there; skip the allocation in that case.
    if !matches!(kind, SimilarityKind::Cosine) {
        for k in 0..n {
            if k == i {
                continue;
            }
            let hk = kind.hessian_first(points[i], points[k]);
            for r in 0..d {
                for c in 0..d {
                    h[r][c] += beta * p[k] * hk[r][c];
                }
            }
        }
        let hj = kind.hessian_first(points[i], points[j]);
        for r in 0..d {
            for c in 0..d {
                h[r][c] -= beta * hj[r][c];
            }
        }
    }
    h
}

/// Ambient Euclidean Hessian of the anchor term l_ij with respect to z_i:
/// beta^2 Cov_{k ~ p_i}[grad s_ik] + beta (E_{k ~ p_i}[H_ik] - H_ij).
pub fn infonce_hessian_anchor(
    z: &Configuration,
    i: usize,
    j: usize,
    beta: f64,
    kind: SimilarityKind,
    pairs: &PairSet,
) -> Result<Vec<Vec<f64>>> {
    check_dims(z, pairs);
    if !pairs.contains(i, j) {
        return Err(Error::InvalidInstance(format!(
            "({i}, {j}) is not a positive pair"
        )));
    }
    assert!(beta > 0.0, "Hessian evaluation requires beta > 0");
    Ok(hessian_anchor_raw(&z.rows(), i, j, beta, kind))
}

pub(crate) fn limit_raw(points: &[&[f64]], kind: SimilarityKind, pairs: &PairSet) -> f64 {
    let mut total = 0.0;
    for &(i, j) in pairs.pairs() {
        let row = anchor_row(points, kind, i);
        total += row.smax - row.sims[j];
    }
    total / pairs.len() as f64
}

/// Limiting potential U0(Z) = (1/|P|) sum [ -s_ij + max_k s_ik ]. Always
/// nonnegative; zero exactly when every positive attains its anchor's max.
pub fn limiting_potential(z: &Configuration, kind: SimilarityKind, pairs: &PairSet) -> f64 {
    check_dims(z, pairs);
    limit_raw(&z.rows(), kind, pairs)
}

/// The log-sum-exp approximation error L(Z, beta)/beta - U0(Z), computed in
/// its cancellation-free form (1/|P|) sum ln(sum_k e^{beta (s_ik - smax)})/beta.
/// Squeezed between (1/|P|) sum ln|K_i| / beta and ln(N-1) / beta.
pub fn scaled_loss_gap(z: &Configuration, beta: f64, kind: SimilarityKind, pairs: &PairSet) -> f64 {
    check_dims(z, pairs);
    assert!(beta > 0.0, "the scaled-loss gap requires beta > 0");
    let rows = z.rows();
    let mut total = 0.0;
    for &(i, _) in pairs.pairs() {
        let row = anchor_row(&rows, kind, i);
        total += row.logsumexp_shifted(beta, i) / beta;
    }
    total / pairs.len() as f64
}

/// Per-anchor argmax candidate set sizes |K_i(Z)| with ties within
/// [`ARGMAX_TIE_TOL`], one entry per pair. The squeeze lower bound is
/// (1/|P|) sum ln|K_i| / beta.
pub fn argmax_set_sizes(z: &Configuration, kind: SimilarityKind, pairs: &PairSet) -> Vec<usize> {
    check_dims(z, pairs);
    let rows = z.rows();
    pairs
        .pairs()
        .iter()
        .map(|&(i, _)| anchor_row(&rows, kind, i).argmax_count(i))
        .collect()
}

/// Lowest-index argmax candidate of anchor i.
pub fn argmax_candidate(z: &Configuration, i: usize, kind: SimilarityKind) -> usize {
    anchor_row(&z.rows(), kind, i).argmax
}

/// An InfoNCE problem instance: the similarity kind plus the positive-pair
/// set. This is the potential handle the integrator drives.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoNceInstance {
    pub kind: SimilarityKind,
    pub pairs: PairSet,
}

impl InfoNceInstance {
    pub fn new(kind: SimilarityKind, pairs: PairSet) -> Self {
        Self { kind, pairs }
    }

    pub fn loss(&self, z: &Configuration, beta: f64) -> f64 {
        infonce_loss(z, beta, self.kind, &self.pairs)
    }

    pub fn gradient(&self, z: &Configuration, beta: f64) -> PotentialEval {
        infonce_gradient(z, beta, self.kind, &self.pairs)
    }

    pub fn limiting_potential(&self, z: &Configuration) -> f64 {
        limiting_potential(z, self.kind, &self.pairs)
    }

    pub fn scaled_loss_gap(&self, z: &Configuration, beta: f64) -> f64 {
        scaled_loss_gap(z, beta, self.kind, &self.pairs)
    }
}
