//! Brute-force validation path: each continuum reservoir is replaced by M
//! discrete modes with local thermal gain and loss, and the stationary
//! correlation matrix of the resulting quadratic Lindbladian is solved
//! exactly as a linear system. Currents then follow directly from tunneling
//! expectation values, with no frequency integrals anywhere.
//!
//! Stationarity reads X C + C X^dag = K_in + 2 gamma O C O with
//! X = i H + K/2 + gamma O^2, K the diagonal of mode relaxation rates and
//! K_in the diagonal of gain rates kappa f_r(eps_k). Because the leads enter
//! X diagonally, the lead-lead block of C can be eliminated exactly, leaving
//! a dense linear system in the system-system and system-lead blocks only.
//! A full vectorized solve is kept for cross-validation at small sizes.

use crate::error::{Error, Result};
use crate::greens::junction_breakpoints;
use crate::linalg;
use crate::model::{Junction, Lead, Moment};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const DENSE_LIMIT: usize = 64;
const RESIDUAL_LIMIT: f64 = 1e-9;

/// One discretized reservoir mode.
#[derive(Debug, Clone, Copy)]
pub struct LeadMode {
    pub lead: Lead,
    pub energy: f64,
    /// Scalar tunneling amplitude t_k = sqrt(Gamma(eps_k) d_eps / pi).
    pub coupling: f64,
    /// Thermal occupation f_r(eps_k) of the mode's bath channel.
    pub occupation: f64,
}

/// Junction with its reservoirs replaced by broadened, locally thermalized
/// modes.
#[derive(Debug, Clone)]
pub struct DiscretizedJunction {
    pub n_sites: usize,
    /// Full single-particle Hamiltonian, system block first.
    pub h_full: DMatrix<Complex64>,
    /// Monitor matrix zero-padded to the full dimension.
    pub o_full: DMatrix<Complex64>,
    /// System-to-mode coupling block, n_sites x (2 M).
    pub coupling: DMatrix<Complex64>,
    pub modes: Vec<LeadMode>,
    /// Mode relaxation rate; gain is kappa f, loss kappa (1 - f).
    pub kappa: f64,
    pub gamma: f64,
    pub mu: [f64; 2],
    pub spacing: f64,
}

impl DiscretizedJunction {
    pub fn total_modes(&self) -> usize {
        self.n_sites + self.modes.len()
    }

    /// Effective hybridization pi sum_k t_k^2 delta_kappa(w - eps_k) seen by
    /// the system, with a width-kappa Lorentzian broadening per mode.
    pub fn effective_hybridization(&self, lead: Lead, omega: f64) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.lead == lead)
            .map(|m| {
                let d = omega - m.energy;
                m.coupling * m.coupling * self.kappa / (d * d + self.kappa * self.kappa)
            })
            .sum()
    }

    fn x_system(&self) -> DMatrix<Complex64> {
        let n = self.n_sites;
        let h_ss = self.h_full.view((0, 0), (n, n)).into_owned();
        let o = self.o_full.view((0, 0), (n, n)).into_owned();
        h_ss * Complex64::new(0.0, 1.0) + &o * &o * Complex64::new(self.gamma, 0.0)
    }

    /// Diagonal entries i eps_k + kappa/2 of the lead block of X.
    fn lead_poles(&self) -> Vec<Complex64> {
        self.modes
            .iter()
            .map(|m| Complex64::new(self.kappa / 2.0, m.energy))
            .collect()
    }

    fn x_full(&self) -> DMatrix<Complex64> {
        let nt = self.total_modes();
        let n = self.n_sites;
        let mut x = &self.h_full * Complex64::new(0.0, 1.0);
        for k in 0..self.modes.len() {
            x[(n + k, n + k)] += Complex64::new(self.kappa / 2.0, 0.0);
        }
        let mut osq = DMatrix::<Complex64>::zeros(nt, nt);
        let o = self.o_full.view((0, 0), (n, n));
        let block = &o * &o;
        for i in 0..n {
            for j in 0..n {
                osq[(i, j)] = block[(i, j)];
            }
        }
        x + osq * Complex64::new(self.gamma, 0.0)
    }

    fn gain_diagonal(&self) -> DVector<Complex64> {
        let mut k_in = DVector::zeros(self.total_modes());
        for (k, m) in self.modes.iter().enumerate() {
            k_in[self.n_sites + k] = Complex64::new(self.kappa * m.occupation, 0.0);
        }
        k_in
    }
}

/// Replace the reservoirs of `junction` by `modes_per_lead` linearly spaced
/// modes each. The band defaults to covering every resonance by ten widths
/// and every Fermi edge by ten temperatures; kappa defaults to twice the
/// level spacing.
pub fn discretize(
    junction: &Junction,
    modes_per_lead: usize,
    band: Option<(f64, f64)>,
    kappa: Option<f64>,
) -> Result<DiscretizedJunction> {
    junction.validated()?;
    if modes_per_lead < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 modes per lead, got {modes_per_lead}"
        )));
    }
    let n = junction.n_sites();

    let mut resonances = linalg::hermitian_eigenvalues(junction.hamiltonian.matrix());
    let mut width: f64 = junction.gamma.max(0.1);
    for lead in Lead::BOTH {
        let res = junction.reservoir(lead);
        resonances.extend(res.hybridization.kind.breakpoints());
        width = width.max(res.hybridization.kind.scale()).max(res.temperature);
    }
    let (lo, hi) = match band {
        Some((lo, hi)) => {
            for &r in &resonances {
                if r < lo || r > hi {
                    return Err(Error::BandCoverage { lo, hi, resonance: r });
                }
            }
            (lo, hi)
        }
        None => {
            let mut lo = resonances.iter().cloned().fold(f64::INFINITY, f64::min) - 10.0 * width;
            let mut hi =
                resonances.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 10.0 * width;
            for lead in Lead::BOTH {
                let res = junction.reservoir(lead);
                lo = lo.min(res.mu - 10.0 * res.temperature - width);
                hi = hi.max(res.mu + 10.0 * res.temperature + width);
            }
            (lo, hi)
        }
    };

    let spacing = (hi - lo) / modes_per_lead as f64;
    let kappa = kappa.unwrap_or(2.0 * spacing);
    if !(kappa > 0.0) {
        return Err(Error::invalid(format!("kappa must be > 0, got {kappa}")));
    }

    let total = n + 2 * modes_per_lead;
    let mut h_full = DMatrix::<Complex64>::zeros(total, total);
    let mut coupling = DMatrix::<Complex64>::zeros(n, 2 * modes_per_lead);
    for i in 0..n {
        for j in 0..n {
            h_full[(i, j)] = junction.hamiltonian.matrix()[(i, j)];
        }
    }
    let mut modes = Vec::with_capacity(2 * modes_per_lead);
    for lead in Lead::BOTH {
        let res = junction.reservoir(lead);
        let v = res.hybridization.coupling_vector(n);
        for k in 0..modes_per_lead {
            let energy = lo + (k as f64 + 0.5) * spacing;
            let t_k = (res.hybridization.kind.value(energy) * spacing / std::f64::consts::PI)
                .sqrt();
            let idx = modes.len();
            h_full[(n + idx, n + idx)] = Complex64::new(energy, 0.0);
            for i in 0..n {
                let amp = v[i] * t_k;
                h_full[(i, n + idx)] = amp;
                h_full[(n + idx, i)] = amp.conj();
                coupling[(i, idx)] = amp;
            }
            modes.push(LeadMode {
                lead,
                energy,
                coupling: t_k,
                occupation: res.fermi(energy),
            });
        }
    }

    let mut o_full = DMatrix::<Complex64>::zeros(total, total);
    for i in 0..n {
        for j in 0..n {
            o_full[(i, j)] = junction.monitor.matrix()[(i, j)];
        }
    }

    Ok(DiscretizedJunction {
        n_sites: n,
        h_full,
        o_full,
        coupling,
        modes,
        kappa,
        gamma: junction.gamma,
        mu: [junction.left.mu, junction.right.mu],
        spacing,
    })
}

/// Stationary correlation matrix of the discretized junction.
#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Full (n + 2M) x (n + 2M) Hermitian correlation matrix.
    pub correlation: DMatrix<Complex64>,
    /// max |X C + C X^dag - K_in - 2 gamma O C O| of the returned C.
    pub residual: f64,
}

impl SteadyState {
    /// Eigenvalues of the correlation matrix, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.correlation)
    }
}

// Real parametrization: a Hermitian n x n block packs into n^2 reals
// (diagonal, then re/im of the upper triangle); a complex n x l block packs
// into 2 n l reals.
fn hermitian_params(n: usize) -> usize {
    n * n
}

fn pack_hermitian(m: &DMatrix<Complex64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut idx = 0;
    for i in 0..n {
        out[idx] = m[(i, i)].re;
        idx += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out[idx] = m[(i, j)].re;
            out[idx + 1] = m[(i, j)].im;
            idx += 2;
        }
    }
}

fn unpack_hermitian(params: &[f64], n: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        m[(i, i)] = Complex64::new(params[idx], 0.0);
        idx += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let z = Complex64::new(params[idx], params[idx + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            idx += 2;
        }
    }
    m
}

fn pack_rect(m: &DMatrix<Complex64>, out: &mut [f64]) {
    let mut idx = 0;
    for s in 0..m.nrows() {
        for k in 0..m.ncols() {
            out[idx] = m[(s, k)].re;
            out[idx + 1] = m[(s, k)].im;
            idx += 2;
        }
    }
}

fn unpack_rect(params: &[f64], n: usize, l: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, l);
    let mut idx = 0;
    for s in 0..n {
        for k in 0..l {
            m[(s, k)] = Complex64::new(params[idx], params[idx + 1]);
            idx += 2;
        }
    }
    m
}

/// Dense evaluation of the reduced stationarity residual blocks given the
/// system-system and system-lead correlation blocks (lead-lead eliminated).
/// Returns (E_ss, E_sl) of
///   E_ss = X_ss C_ss + C_ss X_ss^dag + i T C_sl^dag - i C_sl T^dag
///          - 2 gamma O C_ss O,
///   E_sl = X_ss C_sl + C_sl diag(conj d) + i T C_ll[C_sl] - i C_ss T,
/// where C_ll[C_sl] is the linear part of the eliminated lead-lead block.
/// Reference implementation for validating the sparse-aware assembly.
#[cfg(test)]
fn apply_reduced(
    dj: &DiscretizedJunction,
    c_ss: &DMatrix<Complex64>,
    c_sl: &DMatrix<Complex64>,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = dj.n_sites;
    let l = dj.modes.len();
    let x_ss = dj.x_system();
    let t = &dj.coupling;
    let poles = dj.lead_poles();
    let o = dj.o_full.view((0, 0), (n, n)).into_owned();
    let i_unit = Complex64::new(0.0, 1.0);

    let w = t.adjoint() * c_sl; // l x l
    let mut c_ll = DMatrix::<Complex64>::zeros(l, l);
    for p in 0..l {
        for q in 0..l {
            let denom = poles[p] + poles[q].conj();
            c_ll[(p, q)] = (-i_unit * w[(p, q)] + i_unit * w[(q, p)].conj()) / denom;
        }
    }

    let e_ss = &x_ss * c_ss + c_ss * x_ss.adjoint() + (t * c_sl.adjoint()) * i_unit
        - (c_sl * t.adjoint()) * i_unit
        - (&o * c_ss * &o) * Complex64::new(2.0 * dj.gamma, 0.0);

    let mut e_sl = &x_ss * c_sl + (t * &c_ll) * i_unit - (c_ss * t) * i_unit;
    for s in 0..n {
        for k in 0..l {
            e_sl[(s, k)] += c_sl[(s, k)] * poles[k].conj();
        }
    }
    (e_ss, e_sl)
}

/// Assemble the reduced real linear system (operator matrix and right-hand
/// side) over the packed (C_ss, C_sl) unknowns.
fn reduced_system(dj: &DiscretizedJunction) -> (DMatrix<f64>, DVector<f64>) {
    let n = dj.n_sites;
    let l = dj.modes.len();
    let dim = hermitian_params(n) + 2 * n * l;
    let x_ss = dj.x_system();
    let t = &dj.coupling;
    let poles = dj.lead_poles();
    let o = dj.o_full.view((0, 0), (n, n)).into_owned();
    let i_unit = Complex64::new(0.0, 1.0);

    let mut system = DMatrix::<f64>::zeros(dim, dim);
    let mut column = vec![0.0f64; dim];
    let write_column = |col: usize,
                        system: &mut DMatrix<f64>,
                        e_ss: &DMatrix<Complex64>,
                        e_sl: &DMatrix<Complex64>,
                        column: &mut [f64]| {
        pack_hermitian(e_ss, &mut column[..n * n]);
        pack_rect(e_sl, &mut column[n * n..]);
        for (row, v) in column.iter().enumerate() {
            system[(row, col)] = *v;
        }
    };

    // System-system basis elements: dense small-block arithmetic.
    let mut ss_bases: Vec<DMatrix<Complex64>> = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut e = DMatrix::<Complex64>::zeros(n, n);
        e[(i, i)] = Complex64::new(1.0, 0.0);
        ss_bases.push(e);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for z in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut e = DMatrix::<Complex64>::zeros(n, n);
                e[(i, j)] = z;
                e[(j, i)] = z.conj();
                ss_bases.push(e);
            }
        }
    }
    for (col, e) in ss_bases.iter().enumerate() {
        let e_ss = &x_ss * e + e * x_ss.adjoint()
            - (&o * e * &o) * Complex64::new(2.0 * dj.gamma, 0.0);
        let e_sl = (e * t) * (-i_unit);
        write_column(col, &mut system, &e_ss, &e_sl, &mut column);
    }

    // System-lead basis elements: sparse-aware O(n l) assembly per column.
    let mut e_ss = DMatrix::<Complex64>::zeros(n, n);
    let mut e_sl = DMatrix::<Complex64>::zeros(n, l);
    for s in 0..n {
        for k in 0..l {
            for (which, z) in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]
                .into_iter()
                .enumerate()
            {
                let col = n * n + 2 * (s * l + k) + which;
                e_ss.fill(Complex64::new(0.0, 0.0));
                e_sl.fill(Complex64::new(0.0, 0.0));

                // i T C_sl^dag - i C_sl T^dag with C_sl = z e_s e_k^T.
                for i in 0..n {
                    e_ss[(i, s)] += i_unit * t[(i, k)] * z.conj();
                    e_ss[(s, i)] -= i_unit * z * t[(i, k)].conj();
                }

                // X_ss C_sl and the diagonal lead pole.
                for i in 0..n {
                    e_sl[(i, k)] += x_ss[(i, s)] * z;
                }
                e_sl[(s, k)] += z * poles[k].conj();

                // i T C_ll_lin with W = z (T^dag e_s) e_k^T:
                //   (T C_ll_lin)[s', q] = i zbar T[s', k] T[s, q] / (d_k + conj d_q)
                //                          for the row part, and
                //   (T C_ll_lin)[s', k] = -i z sum_p T[s', p] conj(T[s, p])
                //                          / (d_p + conj d_k) for the column.
                for sp in 0..n {
                    let t_spk = t[(sp, k)];
                    for q in 0..l {
                        let denom = poles[k] + poles[q].conj();
                        // times the leading i of (i T C_ll).
                        e_sl[(sp, q)] += i_unit * (i_unit * z.conj() * t_spk * t[(s, q)] / denom);
                    }
                    let mut acc = Complex64::new(0.0, 0.0);
                    for p in 0..l {
                        let denom = poles[p] + poles[k].conj();
                        acc += t[(sp, p)] * t[(s, p)].conj() / denom;
                    }
                    e_sl[(sp, k)] += i_unit * (-i_unit * z * acc);
                }

                write_column(col, &mut system, &e_ss, &e_sl, &mut column);
            }
        }
    }

    // Right-hand side: the constant lead occupation diag(f) enters through
    // i T C_ll_const, moved to the RHS as -i T diag(f).
    let mut rhs = DVector::<f64>::zeros(dim);
    let mut b_sl = DMatrix::<Complex64>::zeros(n, l);
    for s in 0..n {
        for k in 0..l {
            b_sl[(s, k)] = -i_unit * t[(s, k)] * dj.modes[k].occupation;
        }
    }
    {
        let zero_ss = DMatrix::<Complex64>::zeros(n, n);
        pack_hermitian(&zero_ss, &mut column[..n * n]);
        pack_rect(&b_sl, &mut column[n * n..]);
        for (row, v) in column.iter().enumerate() {
            rhs[row] = *v;
        }
    }
    (system, rhs)
}

/// Exact stationary solve by eliminating the lead-lead block; scales to
/// hundreds of modes per lead.
pub fn steady_state(dj: &DiscretizedJunction) -> Result<SteadyState> {
    let n = dj.n_sites;
    let l = dj.modes.len();
    let t = &dj.coupling;
    let poles = dj.lead_poles();
    let i_unit = Complex64::new(0.0, 1.0);

    let (system, rhs) = reduced_system(dj);
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateDiscretization("reduced stationary solve".into()))?;
    let sol: Vec<f64> = solution.iter().copied().collect();
    let c_ss = unpack_hermitian(&sol[..n * n], n);
    let c_sl = unpack_rect(&sol[n * n..], n, l);

    // Reconstruct the eliminated lead-lead block.
    let w = t.adjoint() * &c_sl;
    let mut c_ll = DMatrix::<Complex64>::zeros(l, l);
    for p in 0..l {
        for q in 0..l {
            let denom = poles[p] + poles[q].conj();
            let gain = if p == q {
                Complex64::new(dj.kappa * dj.modes[p].occupation, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            c_ll[(p, q)] = (gain - i_unit * w[(p, q)] + i_unit * w[(q, p)].conj()) / denom;
        }
    }

    let nt = dj.total_modes();
    let mut c = DMatrix::<Complex64>::zeros(nt, nt);
    for i in 0..n {
        for j in 0..n {
            c[(i, j)] = c_ss[(i, j)];
        }
        for k in 0..l {
            c[(i, n + k)] = c_sl[(i, k)];
            c[(n + k, i)] = c_sl[(i, k)].conj();
        }
    }
    for p in 0..l {
        for q in 0..l {
            c[(n + p, n + q)] = c_ll[(p, q)];
        }
    }

    finish_state(dj, c)
}

/// Full vectorized solve of the stationary equation; exact but limited to
/// small mode counts, used to cross-validate the reduced solver.
pub fn steady_state_dense(dj: &DiscretizedJunction) -> Result<SteadyState> {
    let nt = dj.total_modes();
    if nt > DENSE_LIMIT {
        return Err(Error::DenseSolveTooLarge { size: nt, limit: DENSE_LIMIT });
    }
    let x = dj.x_full();
    let o = &dj.o_full;
    let k_in = dj.gain_diagonal();
    let dim = nt * nt;
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    let two_gamma = Complex64::new(2.0 * dj.gamma, 0.0);
    for i in 0..nt {
        for j in 0..nt {
            let row = i * nt + j;
            for p in 0..nt {
                a[(row, p * nt + j)] += x[(i, p)];
                a[(row, i * nt + p)] += x[(j, p)].conj();
            }
            if dj.gamma > 0.0 {
                for p in 0..nt {
                    if o[(i, p)].norm() == 0.0 {
                        continue;
                    }
                    for q in 0..nt {
                        a[(row, p * nt + q)] -= two_gamma * o[(i, p)] * o[(q, j)];
                    }
                }
            }
        }
    }
    let mut rhs = DVector::<Complex64>::zeros(dim);
    for i in 0..nt {
        rhs[i * nt + i] = k_in[i];
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateDiscretization("vectorized stationary solve".into()))?;
    let c = DMatrix::from_fn(nt, nt, |i, j| sol[i * nt + j]);
    finish_state(dj, c)
}

fn finish_state(dj: &DiscretizedJunction, raw: DMatrix<Complex64>) -> Result<SteadyState> {
    let (c, _) = linalg::hermitize(&raw);
    let x = dj.x_full();
    let n = dj.n_sites;
    let o = dj.o_full.view((0, 0), (n, n)).into_owned();
    let mut residual_matrix = &x * &c + &c * x.adjoint();
    for (k, m) in dj.modes.iter().enumerate() {
        residual_matrix[(n + k, n + k)] -= Complex64::new(dj.kappa * m.occupation, 0.0);
    }
    let feedback = &o * c.view((0, 0), (n, n)) * &o * Complex64::new(2.0 * dj.gamma, 0.0);
    for i in 0..n {
        for j in 0..n {
            residual_matrix[(i, j)] -= feedback[(i, j)];
        }
    }
    let residual = linalg::max_abs(&residual_matrix);
    if residual > RESIDUAL_LIMIT {
        return Err(Error::ResidualTooLarge { residual, tolerance: RESIDUAL_LIMIT });
    }
    Ok(SteadyState { correlation: c, residual })
}

/// Per-lead particle and heat currents of a stationary state.
#[derive(Debug, Clone, Copy)]
pub struct OracleCurrents {
    /// (J0, J1) into the left reservoir.
    pub left: (f64, f64),
    /// (J0, J1) into the right reservoir.
    pub right: (f64, f64),
    /// Largest disagreement between the tunneling-expectation route and the
    /// gain/loss-channel route; an internal consistency diagnostic.
    pub channel_mismatch: f64,
}

impl OracleCurrents {
    pub fn lead(&self, lead: Lead) -> (f64, f64) {
        match lead {
            Lead::Left => self.left,
            Lead::Right => self.right,
        }
    }

    pub fn particle_defect(&self) -> f64 {
        self.left.0 + self.right.0
    }
}

/// Currents from the stationary correlation matrix, computed both from
/// tunneling expectation values 2 sum_k (e_k - mu)^zeta Im[t_k C_{site,k}]
/// and from the thermal channels kappa (C_kk - f_k).
pub fn oracle_currents(dj: &DiscretizedJunction, state: &SteadyState) -> OracleCurrents {
    let n = dj.n_sites;
    let c = &state.correlation;
    let mut tunneling = [[0.0f64; 2]; 2];
    let mut channel = [[0.0f64; 2]; 2];
    for (k, m) in dj.modes.iter().enumerate() {
        let lead_idx = match m.lead {
            Lead::Left => 0,
            Lead::Right => 1,
        };
        let mu = dj.mu[lead_idx];
        let mut inflow = 0.0;
        for i in 0..n {
            inflow += 2.0 * (dj.coupling[(i, k)] * c[(i, n + k)]).im;
        }
        let thermal = dj.kappa * (c[(n + k, n + k)].re - m.occupation);
        for (zeta, weight) in [(0usize, 1.0), (1usize, m.energy - mu)] {
            tunneling[lead_idx][zeta] += weight * inflow;
            channel[lead_idx][zeta] += weight * thermal;
        }
    }
    let mut mismatch = 0.0f64;
    for lead in 0..2 {
        for zeta in 0..2 {
            mismatch = mismatch.max((tunneling[lead][zeta] - channel[lead][zeta]).abs());
        }
    }
    OracleCurrents {
        left: (tunneling[0][0], tunneling[0][1]),
        right: (tunneling[1][0], tunneling[1][1]),
        channel_mismatch: mismatch,
    }
}

/// Convenience: current moments keyed by `Moment`.
pub fn oracle_current(oc: &OracleCurrents, lead: Lead, moment: Moment) -> f64 {
    let (j0, j1) = oc.lead(lead);
    match moment {
        Moment::Particle => j0,
        Moment::Heat => j1,
    }
}

/// Default discretization band for a junction, as used by `discretize` when
/// no explicit band is given; exposed for calibration sweeps.
pub fn default_band(junction: &Junction) -> (f64, f64) {
    let bps = junction_breakpoints(junction);
    let lo = bps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = bps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = junction.gamma.max(1.0);
    (lo - 10.0 * width, hi + 10.0 * width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Hybridization, HybridizationKind, MonitorOperator, Reservoir, SystemHamiltonian,
    };
    use crate::numerics::{integrate, QuadratureSpec};
    use approx::assert_relative_eq;

    fn filter(coupling: f64, width: f64, center: f64) -> HybridizationKind {
        HybridizationKind::LorentzianFilter { coupling, width, center }
    }

    fn two_filter_level(eps_d: f64, gamma: f64) -> Junction {
        Junction::new(
            SystemHamiltonian::single_level(eps_d),
            MonitorOperator::site_occupation(1, 0),
            Reservoir::new(Hybridization::on_site(filter(1.0, 0.55, -1.48), 0), 0.0, 0.0),
            Reservoir::new(Hybridization::on_site(filter(1.0, 0.55, 1.48), 0), 0.0, 0.0),
            gamma,
        )
    }

    fn flat_junction(gamma0: f64, gamma: f64) -> Junction {
        let kind = HybridizationKind::FlatBand { gamma0, half_bandwidth: 4.0, wide_band: false };
        Junction::new(
            SystemHamiltonian::single_level(0.0),
            MonitorOperator::site_occupation(1, 0),
            Reservoir::new(Hybridization::on_site(kind.clone(), 0), 0.0, 0.5),
            Reservoir::new(Hybridization::on_site(kind, 0), 0.0, 0.5),
            gamma,
        )
    }

    #[test]
    fn flat_band_gives_equal_couplings() {
        let dj = discretize(&flat_junction(0.3, 0.0), 16, Some((-4.0, 4.0)), None).unwrap();
        let t0 = dj.modes[0].coupling;
        assert!(t0 > 0.0);
        for m in &dj.modes {
            assert_relative_eq!(m.coupling, t0, max_relative = 1e-14);
        }
    }

    #[test]
    fn doubling_modes_halves_spacing_and_kappa() {
        let j = two_filter_level(0.0, 0.5);
        let band = Some((-20.0, 20.0));
        let a = discretize(&j, 50, band, None).unwrap();
        let b = discretize(&j, 100, band, None).unwrap();
        assert_relative_eq!(b.spacing, a.spacing / 2.0, max_relative = 1e-14);
        assert_relative_eq!(b.kappa, a.kappa / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn coupling_sum_rule_matches_band_average() {
        let j = two_filter_level(0.0, 0.0);
        let band = (-25.0, 25.0);
        let dj = discretize(&j, 400, Some(band), None).unwrap();
        for lead in Lead::BOTH {
            let sum: f64 = dj
                .modes
                .iter()
                .filter(|m| m.lead == lead)
                .map(|m| std::f64::consts::PI * m.coupling * m.coupling / dj.spacing)
                .sum();
            let res = j.reservoir(lead);
            let spec = QuadratureSpec {
                window: Some(band),
                ..QuadratureSpec::default().with_breakpoints(res.hybridization.kind.breakpoints())
            };
            // Integrate Gamma over the band only (zero tails would distort it).
            let integral = integrate(
                |w| {
                    if w < band.0 || w > band.1 {
                        0.0
                    } else {
                        res.hybridization.kind.value(w)
                    }
                },
                &spec,
            )
            .unwrap();
            let average = integral.value / dj.spacing;
            assert_relative_eq!(sum, average, max_relative = 0.01);
        }
    }

    #[test]
    fn band_must_cover_resonances() {
        let j = two_filter_level(0.0, 0.0);
        match discretize(&j, 50, Some((-1.0, 1.0)), None) {
            Err(Error::BandCoverage { .. }) => {}
            other => panic!("expected BandCoverage, got {other:?}"),
        }
    }

    #[test]
    fn hybridization_reconstruction_within_five_percent() {
        // The broadened-comb reconstruction converges like kappa against the
        // Lorentzian filter width, so this uses a fine grid with kappa equal
        // to one level spacing.
        let j = two_filter_level(0.0, 0.0);
        let spacing = 20.0 / 1200.0;
        let dj = discretize(&j, 1200, Some((-10.0, 10.0)), Some(spacing)).unwrap();
        for lead in Lead::BOTH {
            let res = j.reservoir(lead);
            for k in 0..10 {
                let w = -2.5 + 5.0 * k as f64 / 9.0;
                let exact = res.hybridization.kind.value(w);
                let eff = dj.effective_hybridization(lead, w);
                assert!(
                    (eff - exact).abs() <= 0.05 * exact.max(1e-3),
                    "lead {lead}, w {w}: {eff} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn uncoupled_modes_thermalize_to_their_occupation() {
        // A finite flat band leaves the modes outside |w| <= W with zero
        // coupling; their stationary occupation must equal f exactly.
        let j = flat_junction(0.3, 0.0);
        let dj = discretize(&j, 24, Some((-8.0, 8.0)), None).unwrap();
        let state = steady_state(&dj).unwrap();
        let n = dj.n_sites;
        for (k, m) in dj.modes.iter().enumerate() {
            if m.coupling == 0.0 {
                assert_relative_eq!(
                    state.correlation[(n + k, n + k)].re,
                    m.occupation,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn decoupled_system_site_is_flagged_singular() {
        let dead = HybridizationKind::FlatBand { gamma0: 0.0, half_bandwidth: 4.0, wide_band: false };
        let j = Junction::new(
            SystemHamiltonian::single_level(0.3),
            MonitorOperator::site_occupation(1, 0),
            Reservoir::new(Hybridization::on_site(dead.clone(), 0), 0.0, 0.5),
            Reservoir::new(Hybridization::on_site(dead, 0), 0.0, 0.5),
            0.0,
        );
        let dj = discretize(&j, 8, Some((-4.0, 4.0)), None).unwrap();
        assert!(matches!(
            steady_state(&dj),
            Err(Error::DegenerateDiscretization(_)) | Err(Error::ResidualTooLarge { .. })
        ));
    }

    #[test]
    fn specialized_assembly_matches_dense_apply() {
        // The sparse-aware column construction must agree with the
        // straightforward dense residual evaluation on random inputs.
        let j = crate::scenarios::CrossCorrelationCooler::new(1.0, -0.5, 0.9).junction();
        let dj = discretize(&j, 5, Some((-6.0, 6.0)), None).unwrap();
        let n = dj.n_sites;
        let l = dj.modes.len();
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut c_ss = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            c_ss[(i, i)] = Complex64::new(next(), 0.0);
            for jj in (i + 1)..n {
                let z = Complex64::new(next(), next());
                c_ss[(i, jj)] = z;
                c_ss[(jj, i)] = z.conj();
            }
        }
        let c_sl = DMatrix::from_fn(n, l, |_, _| Complex64::new(next(), next()));
        let (e_ss_ref, e_sl_ref) = apply_reduced(&dj, &c_ss, &c_sl);

        let (system, _) = reduced_system(&dj);
        let dim = n * n + 2 * n * l;
        let mut packed = DVector::<f64>::zeros(dim);
        {
            let slice = packed.as_mut_slice();
            pack_hermitian(&c_ss, &mut slice[..n * n]);
            pack_rect(&c_sl, &mut slice[n * n..]);
        }
        let applied = &system * packed;
        let mut expected = vec![0.0; dim];
        pack_hermitian(&e_ss_ref, &mut expected[..n * n]);
        pack_rect(&e_sl_ref, &mut expected[n * n..]);
        for (row, want) in expected.iter().enumerate() {
            assert!(
                (applied[row] - want).abs() < 1e-12,
                "row {row}: {} vs {want}",
                applied[row]
            );
        }
    }

    #[test]
    fn reduced_and_dense_solvers_agree() {
        for (junction, m) in [
            (two_filter_level(0.0, 1.0), 12usize),
            (two_filter_level(0.4, 0.0), 10),
            (crate::scenarios::CrossCorrelationCooler::new(1.5, 0.5, 0.7).junction(), 9),
        ] {
            let dj = discretize(&junction, m, Some((-9.0, 9.0)), None).unwrap();
            let reduced = steady_state(&dj).unwrap();
            let dense = steady_state_dense(&dj).unwrap();
            let diff = linalg::max_abs(&(&reduced.correlation - &dense.correlation));
            assert!(diff < 1e-9, "solver mismatch {diff}");
        }
    }

    #[test]
    fn dense_solver_rejects_large_problems() {
        let dj = discretize(&two_filter_level(0.0, 0.5), 64, Some((-20.0, 20.0)), None).unwrap();
        assert!(matches!(
            steady_state_dense(&dj),
            Err(Error::DenseSolveTooLarge { .. })
        ));
    }

    #[test]
    fn steady_state_is_physical() {
        let j = two_filter_level(0.0, 1.0);
        let dj = discretize(&j, 40, Some((-15.0, 15.0)), None).unwrap();
        let state = steady_state(&dj).unwrap();
        assert!(state.residual < 1e-10);
        let herm = linalg::max_abs(&(&state.correlation - state.correlation.adjoint()));
        assert!(herm < 1e-12);
        let spectrum = state.spectrum();
        assert!(spectrum.first().unwrap() > &-1e-8);
        assert!(spectrum.last().unwrap() < &(1.0 + 1e-8));
    }

    #[test]
    fn currents_balance_between_routes_and_leads() {
        let j = two_filter_level(0.0, 1.0);
        let dj = discretize(&j, 60, Some((-20.0, 20.0)), None).unwrap();
        let state = steady_state(&dj).unwrap();
        let oc = oracle_currents(&dj, &state);
        assert!(oc.channel_mismatch < 1e-8, "mismatch {}", oc.channel_mismatch);
        assert!(oc.particle_defect().abs() < 1e-9, "defect {}", oc.particle_defect());
    }

    #[test]
    fn symmetric_unbiased_junction_carries_no_current() {
        // Mirror-symmetric filters, no monitoring: zero current up to
        // discretization noise.
        let j = Junction::new(
            SystemHamiltonian::single_level(0.0),
            MonitorOperator::site_occupation(1, 0),
            Reservoir::new(Hybridization::on_site(filter(1.0, 0.55, 1.48), 0), 0.0, 0.0),
            Reservoir::new(Hybridization::on_site(filter(1.0, 0.55, 1.48), 0), 0.0, 0.0),
            0.0,
        );
        let dj = discretize(&j, 80, Some((-20.0, 20.0)), None).unwrap();
        let state = steady_state(&dj).unwrap();
        let oc = oracle_currents(&dj, &state);
        assert!(oc.right.0.abs() < 1e-6, "J0 = {}", oc.right.0);
    }

    #[test]
    fn time_evolution_relaxes_to_the_stationary_state() {
        let j = two_filter_level(0.2, 0.8);
        let dj = discretize(&j, 8, Some((-6.0, 6.0)), None).unwrap();
        let state = steady_state(&dj).unwrap();
        let nt = dj.total_modes();
        let x = dj.x_full();
        let k_in = dj.gain_diagonal();
        let n = dj.n_sites;
        let o = dj.o_full.view((0, 0), (n, n)).into_owned();
        let rhs = |c: &DMatrix<Complex64>| -> DMatrix<Complex64> {
            let mut r = -(&x * c) - c * x.adjoint();
            for i in 0..nt {
                r[(i, i)] += k_in[i];
            }
            let fb = &o * c.view((0, 0), (n, n)) * &o * Complex64::new(2.0 * dj.gamma, 0.0);
            for i in 0..n {
                for jj in 0..n {
                    r[(i, jj)] += fb[(i, jj)];
                }
            }
            r
        };
        let mut c = DMatrix::<Complex64>::zeros(nt, nt);
        let dt = 0.02;
        for _ in 0..20_000 {
            let k1 = rhs(&c);
            let k2 = rhs(&(&c + &k1 * Complex64::new(dt / 2.0, 0.0)));
            let k3 = rhs(&(&c + &k2 * Complex64::new(dt / 2.0, 0.0)));
            let k4 = rhs(&(&c + &k3 * Complex64::new(dt, 0.0)));
            c += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
                * Complex64::new(dt / 6.0, 0.0);
        }
        let diff = linalg::max_abs(&(&c - &state.correlation));
        assert!(diff < 1e-7, "time evolution differs by {diff}");
    }
}
