//! Multipath downlink channels over a uniform linear array, expressed in the
//! common beamspace basis.
//!
//! A channel is `h = U · Λ^{1/2} · h̄` where `U` holds the base beams (steering
//! vectors at a fixed sine grid), `Λ` the per-beam statistical gains of a UE
//! and `h̄` unit-variance circularly-symmetric Gaussian fading. Most of the
//! crate works directly with the beamspace coordinates `g = Λ^{1/2} h̄ = Uᴴh`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular tolerance used when validating departure angles.
const ANGLE_EPS: f64 = 1e-12;

/// Uniform linear array geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub num_antennas: usize,
    /// Element spacing in carrier wavelengths.
    pub spacing: f64,
    /// Carrier wavelength in meters.
    pub carrier_wavelength: f64,
}

impl ArrayConfig {
    pub fn new(num_antennas: usize, spacing: f64, carrier_wavelength: f64) -> Result<Self> {
        if num_antennas < 2 {
            return Err(Error::Config(format!(
                "num_antennas must be at least 2, got {num_antennas}"
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Config(format!("spacing must be positive, got {spacing}")));
        }
        if !(carrier_wavelength > 0.0) || !carrier_wavelength.is_finite() {
            return Err(Error::Config(format!(
                "carrier_wavelength must be positive, got {carrier_wavelength}"
            )));
        }
        Ok(Self { num_antennas, spacing, carrier_wavelength })
    }

    /// Half-wavelength array at 900 MHz.
    pub fn half_wavelength(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, 0.5, DEFAULT_WAVELENGTH_M)
    }
}

/// Carrier wavelength of a 900 MHz IoT carrier.
pub const DEFAULT_WAVELENGTH_M: f64 = 299_792_458.0 / 900e6;

fn check_angle(aod: f64) -> Result<()> {
    if aod.is_finite() && aod.abs() <= FRAC_PI_2 + ANGLE_EPS {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange(aod))
    }
}

/// Array response toward `aod`: entry `i` is `exp(-j 2π i ϱ sin(aod)) / √N_t`.
pub fn steering_vector(aod: f64, array: &ArrayConfig) -> Result<Vec<Complex64>> {
    check_angle(aod)?;
    Ok(steering_from_sine(aod.sin(), array))
}

fn steering_from_sine(sine: f64, array: &ArrayConfig) -> Vec<Complex64> {
    let n = array.num_antennas;
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|i| Complex64::from_polar(scale, -2.0 * PI * i as f64 * array.spacing * sine))
        .collect()
}

/// Sine of the `i`-th (0-based) sampled angle, `2(i+1)/N_t − 1`.
pub fn grid_sine(i: usize, num_beams: usize) -> f64 {
    2.0 * (i + 1) as f64 / num_beams as f64 - 1.0
}

/// Index of the sampled angle nearest to `sine` on the uniform sine grid.
/// Exact midpoints go to the lower index.
pub fn nearest_beam(sine: f64, num_beams: usize) -> usize {
    let pos = (sine + 1.0) * num_beams as f64 / 2.0 - 1.0;
    let idx = (pos - 0.5).ceil();
    idx.clamp(0.0, (num_beams - 1) as f64) as usize
}

/// Orthonormal base-beam matrix `U` and its sampled angles.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamspaceBasis {
    num_antennas: usize,
    /// Column-major: column `i` is base beam `u_i`.
    columns: Vec<Complex64>,
    pub sampled_angles: Vec<f64>,
}

impl BeamspaceBasis {
    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn column(&self, i: usize) -> &[Complex64] {
        let n = self.num_antennas;
        &self.columns[i * n..(i + 1) * n]
    }

    /// Entry `(row, col)` of `U`.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.columns[col * self.num_antennas + row]
    }

    /// `Uᴴ · x`.
    pub fn to_beamspace(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(x.len())?;
        Ok((0..self.num_antennas)
            .map(|c| self.column(c).iter().zip(x).map(|(u, v)| u.conj() * v).sum())
            .collect())
    }

    /// `U · g`.
    pub fn from_beamspace(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(g.len())?;
        let n = self.num_antennas;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (c, gc) in g.iter().enumerate() {
            for (o, u) in out.iter_mut().zip(self.column(c)) {
                *o += u * gc;
            }
        }
        Ok(out)
    }

    /// Largest entry of `|UᴴU − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.num_antennas;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let dot: Complex64 =
                    self.column(a).iter().zip(self.column(b)).map(|(x, y)| x.conj() * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.num_antennas {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.num_antennas, actual: len })
        }
    }
}

/// Base beams at `arcsin(2i/N_t − 1)`, `i = 1..N_t`.
pub fn beamspace_basis(array: &ArrayConfig) -> BeamspaceBasis {
    let n = array.num_antennas;
    let mut columns = Vec::with_capacity(n * n);
    let mut sampled_angles = Vec::with_capacity(n);
    for i in 0..n {
        let sine = grid_sine(i, n);
        sampled_angles.push(sine.asin());
        columns.extend(steering_from_sine(sine, array));
    }
    BeamspaceBasis { num_antennas: n, columns, sampled_angles }
}

/// One propagation path from the base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// Amplitude attenuation `a`.
    pub attenuation: f64,
    /// Propagation distance in meters.
    pub distance: f64,
    /// Departure angle in radians.
    pub aod: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathProfile {
    pub paths: Vec<Path>,
}

impl PathProfile {
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Config("a path profile needs at least one path".into()));
        }
        for p in &paths {
            check_angle(p.aod)?;
            if !(p.attenuation >= 0.0) || !(p.distance >= 0.0) {
                return Err(Error::Config(format!(
                    "path attenuation and distance must be non-negative, got {p:?}"
                )));
            }
        }
        Ok(Self { paths })
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }
}

/// Bins every path onto its nearest sampled angle and accumulates the complex
/// amplitudes `a·exp(−j2πd/λ)` per bin; returns the per-bin power.
pub fn beam_gains_from_paths(paths: &PathProfile, array: &ArrayConfig) -> Vec<f64> {
    let n = array.num_antennas;
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for p in &paths.paths {
        let phase = -2.0 * PI * p.distance / array.carrier_wavelength;
        acc[nearest_beam(p.aod.sin(), n)] += Complex64::from_polar(p.attenuation, phase);
    }
    acc.into_iter().map(|a| a.norm_sqr()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UeId(pub u32);

impl std::fmt::Display for UeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ue{}", self.0)
    }
}

/// Statistical CSI of one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeProfile {
    pub id: UeId,
    /// Dominant departure angle.
    pub aod: f64,
    /// Diagonal of `Λ`.
    pub beam_gains: Vec<f64>,
    /// Priority weight `α`.
    pub weight: f64,
}

impl UeProfile {
    pub fn new(id: UeId, aod: f64, beam_gains: Vec<f64>, weight: f64) -> Result<Self> {
        check_angle(aod)?;
        if beam_gains.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::Config(format!("{id}: beam gains must be finite and >= 0")));
        }
        if !beam_gains.iter().any(|g| *g > 0.0) {
            return Err(Error::Config(format!("{id}: at least one beam gain must be positive")));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Config(format!("{id}: weight must be positive, got {weight}")));
        }
        Ok(Self { id, aod, beam_gains, weight })
    }

    /// Expected channel gain `E‖h‖² = tr Λ`.
    pub fn expected_gain(&self) -> f64 {
        self.beam_gains.iter().sum()
    }

    pub fn num_beams(&self) -> usize {
        self.beam_gains.len()
    }
}

/// Parameters of the multipath generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub num_paths: usize,
    /// RMS angular spread of the Laplacian path cluster, radians.
    pub angular_spread: f64,
    /// Exponential power decay per path index (power of path `l` ∝ `exp(−decay·l)`).
    pub path_power_decay: f64,
    pub pathloss_exponent: f64,
    pub cell_radius: f64,
    /// Distances are clamped below at this value before applying path loss.
    pub min_distance: f64,
    /// Large-scale gain `E‖h‖²` of a UE at the median distance `R/√2`, relative
    /// to the noise power. The default puts a median UE about 30 dB below the
    /// transmit SNR and a UE at `min_distance` about 10 dB below it.
    pub median_gain: f64,
    /// Excess propagation distance of scattered paths is uniform on `[0, this]`.
    pub max_excess_distance: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            num_paths: 6,
            angular_spread: 5f64.to_radians(),
            path_power_decay: 0.5,
            pathloss_exponent: 3.7,
            cell_radius: 50.0,
            min_distance: 10.0,
            median_gain: 1e-3,
            max_excess_distance: 30.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_paths < 1 {
            return Err(Error::Config("num_paths must be at least 1".into()));
        }
        let positive = [
            ("cell_radius", self.cell_radius),
            ("median_gain", self.median_gain),
            ("min_distance", self.min_distance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("angular_spread", self.angular_spread),
            ("path_power_decay", self.path_power_decay),
            ("pathloss_exponent", self.pathloss_exponent),
            ("max_excess_distance", self.max_excess_distance),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Large-scale power gain at distance `d`.
    pub fn large_scale_gain(&self, distance: f64) -> f64 {
        let median = self.cell_radius / 2f64.sqrt();
        self.median_gain * (distance.max(self.min_distance) / median).powf(-self.pathloss_exponent)
    }
}

/// Geometry of one dropped UE; independent of the array so that sweeps over
/// `N_t` reuse the same drop.
#[derive(Debug, Clone, PartialEq)]
pub struct UeDrop {
    pub position: (f64, f64),
    pub distance: f64,
    pub aod: f64,
    pub paths: PathProfile,
}

/// Folds an angle into `[−π/2, π/2]` (a ULA cannot tell front from back).
fn fold_angle(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped > FRAC_PI_2 {
        PI - wrapped
    } else if wrapped < -FRAC_PI_2 {
        -PI - wrapped
    } else {
        wrapped
    }
    .clamp(-FRAC_PI_2, FRAC_PI_2)
}

fn laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Drops a UE uniformly in the cell disc and draws its multipath cluster.
pub fn draw_ue<R: Rng + ?Sized>(rng: &mut R, params: &ChannelParams) -> Result<UeDrop> {
    params.validate()?;
    let r = params.cell_radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>() - PI;
    let position = (r * phi.cos(), r * phi.sin());
    let aod = fold_angle(phi);

    let gain = params.large_scale_gain(r);
    let weights: Vec<f64> =
        (0..params.num_paths).map(|l| (-params.path_power_decay * l as f64).exp()).collect();
    let total: f64 = weights.iter().sum();
    let laplace_scale = params.angular_spread / 2f64.sqrt();

    let mut paths = Vec::with_capacity(params.num_paths);
    for (l, w) in weights.iter().enumerate() {
        let (offset, excess) = if l == 0 {
            (0.0, 0.0)
        } else {
            (laplace(rng, laplace_scale), params.max_excess_distance * rng.random::<f64>())
        };
        paths.push(Path {
            attenuation: (gain * w / total).sqrt(),
            distance: r + excess,
            aod: fold_angle(aod + offset),
        });
    }
    Ok(UeDrop { position, distance: r, aod, paths: PathProfile::new(paths)? })
}

/// Statistical profile of a drop on a given array.
pub fn profile_from_drop(drop: &UeDrop, array: &ArrayConfig, id: UeId, weight: f64) -> Result<UeProfile> {
    UeProfile::new(id, drop.aod, beam_gains_from_paths(&drop.paths, array), weight)
}

/// Draws a UE and bins its paths onto the beamspace grid of `array`.
pub fn generate_ue_profile<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ChannelParams,
    array: &ArrayConfig,
    id: UeId,
    weight: f64,
) -> Result<(UeProfile, PathProfile)> {
    let drop = draw_ue(rng, params)?;
    let profile = profile_from_drop(&drop, array, id, weight)?;
    Ok((profile, drop.paths))
}

/// Unit-variance i.i.d. circularly-symmetric Gaussian fading `h̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallScaleFading {
    pub coeffs: Vec<Complex64>,
}

impl SmallScaleFading {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, num_beams: usize) -> Self {
        Self { coeffs: (0..num_beams).map(|_| complex_normal(rng)).collect() }
    }
}

/// One `CN(0, 1)` sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub h: Vec<Complex64>,
}

fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}

/// Beamspace coordinates `Λ^{1/2} h̄`.
pub fn beamspace_channel(profile: &UeProfile, fading: &SmallScaleFading) -> Result<Vec<Complex64>> {
    check_dims(profile.num_beams(), fading.coeffs.len())?;
    Ok(profile.beam_gains.iter().zip(&fading.coeffs).map(|(g, h)| h * g.sqrt()).collect())
}

/// `h = U · Λ^{1/2} · h̄`.
pub fn channel_vector(
    profile: &UeProfile,
    fading: &SmallScaleFading,
    basis: &BeamspaceBasis,
) -> Result<ChannelVector> {
    check_dims(basis.num_antennas(), profile.num_beams())?;
    let g = beamspace_channel(profile, fading)?;
    Ok(ChannelVector { h: basis.from_beamspace(&g)? })
}

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Transmit correlation `R = U Λ Uᴴ`.
pub fn correlation_matrix(profile: &UeProfile, basis: &BeamspaceBasis) -> Result<ComplexMatrix> {
    let n = basis.num_antennas();
    check_dims(n, profile.num_beams())?;
    let mut r = ComplexMatrix::zeros(n);
    for (c, eta) in profile.beam_gains.iter().enumerate() {
        if *eta == 0.0 {
            continue;
        }
        let u = basis.column(c);
        for row in 0..n {
            let scaled = u[row] * eta;
            for col in 0..n {
                r.data[row * n + col] += scaled * u[col].conj();
            }
        }
    }
    Ok(r)
}

/// Per-beam gain estimate `diag(Uᴴ R̂ U)` from sampled channels, where `R̂`
/// is the sample correlation.
pub fn estimate_beam_gains(realizations: &[ChannelVector], basis: &BeamspaceBasis) -> Result<Vec<f64>> {
    if realizations.is_empty() {
        return Err(Error::Argument("need at least one channel realization".into()));
    }
    let n = basis.num_antennas();
    let mut acc = vec![0.0; n];
    for r in realizations {
        for (a, g) in acc.iter_mut().zip(basis.to_beamspace(&r.h)?) {
            *a += g.norm_sqr();
        }
    }
    let count = realizations.len() as f64;
    Ok(acc.into_iter().map(|a| (a / count).max(0.0)).collect())
}

/// `h̄ᴴ Λ h̄ = Σ_c η_c |h̄_c|²`.
pub fn channel_gain(profile: &UeProfile, fading: &SmallScaleFading) -> Result<f64> {
    check_dims(profile.num_beams(), fading.coeffs.len())?;
    Ok(profile.beam_gains.iter().zip(&fading.coeffs).map(|(g, h)| g * h.norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};
    use std::f64::consts::FRAC_PI_6;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn profile(gains: Vec<f64>) -> UeProfile {
        UeProfile::new(UeId(0), 0.0, gains, 1.0).unwrap()
    }

    #[test]
    fn steering_broadside_is_flat() {
        let arr = ArrayConfig::half_wavelength(4).unwrap();
        let v = steering_vector(0.0, &arr).unwrap();
        for z in v {
            assert!(close(z, Complex64::new(0.5, 0.0), 1e-15));
        }
    }

    #[test]
    fn steering_endfire_alternates() {
        let arr = ArrayConfig::half_wavelength(2).unwrap();
        let v = steering_vector(FRAC_PI_2, &arr).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(v[0], Complex64::new(s, 0.0), 1e-15));
        assert!(close(v[1], Complex64::new(-s, 0.0), 1e-15));
    }

    #[test]
    fn steering_matches_scalar_evaluation() {
        let arr = ArrayConfig::half_wavelength(8).unwrap();
        let v = steering_vector(FRAC_PI_6, &arr).unwrap();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        for (i, z) in v.iter().enumerate() {
            // sin(π/6) = 1/2, so the phase step per element is −π/2.
            let phase = -PI * 0.5 * i as f64;
            let expected = Complex64::new(phase.cos(), phase.sin()) / 8f64.sqrt();
            assert!(close(*z, expected, 1e-12), "entry {i}");
        }
    }

    #[test]
    fn steering_rejects_out_of_range() {
        let arr = ArrayConfig::half_wavelength(4).unwrap();
        assert!(matches!(steering_vector(1.6, &arr), Err(Error::AngleOutOfRange(_))));
        assert!(matches!(steering_vector(f64::NAN, &arr), Err(Error::AngleOutOfRange(_))));
    }

    #[test]
    fn array_config_validation() {
        assert!(ArrayConfig::new(1, 0.5, 0.3).is_err());
        assert!(ArrayConfig::new(4, 0.0, 0.3).is_err());
        assert!(ArrayConfig::new(4, 0.5, -1.0).is_err());
    }

    #[test]
    fn basis_is_unitary() {
        for n in [2, 4, 8, 16, 32, 64] {
            let b = beamspace_basis(&ArrayConfig::half_wavelength(n).unwrap());
            assert!(b.unitarity_error() < 1e-10, "n = {n}");
            for c in 0..n {
                let norm: f64 = b.column(c).iter().map(|z| z.norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_antenna_sampled_angles() {
        let b = beamspace_basis(&ArrayConfig::half_wavelength(2).unwrap());
        assert!(b.sampled_angles[0].abs() < 1e-15);
        assert!((b.sampled_angles[1] - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn sine_grid_is_uniform() {
        let b = beamspace_basis(&ArrayConfig::half_wavelength(64).unwrap());
        for w in b.sampled_angles.windows(2) {
            assert!((w[1].sin() - w[0].sin() - 2.0 / 64.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nearest_beam_ties_go_low() {
        // Grid sines for N=4: -0.5, 0, 0.5, 1.
        assert_eq!(nearest_beam(-0.25, 4), 0);
        assert_eq!(nearest_beam(-0.24, 4), 1);
        assert_eq!(nearest_beam(0.0, 4), 1);
        assert_eq!(nearest_beam(-1.0, 4), 0);
        assert_eq!(nearest_beam(1.0, 4), 3);
    }

    #[test]
    fn single_path_on_grid_fills_one_bin() {
        let arr = ArrayConfig::half_wavelength(8).unwrap();
        let angle = grid_sine(5, 8).asin();
        let paths = PathProfile::new(vec![Path { attenuation: 0.7, distance: 12.3, aod: angle }]).unwrap();
        let g = beam_gains_from_paths(&paths, &arr);
        for (i, v) in g.iter().enumerate() {
            if i == 5 {
                assert!((v - 0.49).abs() < 1e-12);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn three_paths_in_distinct_bins() {
        let arr = ArrayConfig::half_wavelength(16).unwrap();
        let spec = [(1, 0.3, 4.0), (7, 1.2, 9.5), (12, 0.05, 20.0)];
        let paths = PathProfile::new(
            spec.iter()
                .map(|&(i, a, d)| Path { attenuation: a, distance: d, aod: grid_sine(i, 16).asin() })
                .collect(),
        )
        .unwrap();
        let g = beam_gains_from_paths(&paths, &arr);
        assert_eq!(g.iter().filter(|v| **v > 0.0).count(), 3);
        for (i, a, _) in spec {
            assert!((g[i] - a * a).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_paths_is_a_config_error() {
        assert!(PathProfile::new(vec![]).is_err());
        let params = ChannelParams { num_paths: 0, ..Default::default() };
        let arr = ArrayConfig::half_wavelength(8).unwrap();
        let mut rng = stream(1, Domain::Aux, 0);
        assert!(matches!(
            generate_ue_profile(&mut rng, &params, &arr, UeId(0), 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn generated_profiles_are_valid() {
        let arr = ArrayConfig::half_wavelength(32).unwrap();
        let params = ChannelParams::default();
        for i in 0..200 {
            let mut rng = stream(3, Domain::UeDrop, i);
            let (p, paths) = generate_ue_profile(&mut rng, &params, &arr, UeId(i as u32), 1.0).unwrap();
            assert_eq!(paths.num_paths(), params.num_paths);
            assert!(p.aod.abs() <= FRAC_PI_2);
            let d = (p.beam_gains.len(), p.beam_gains.iter().all(|g| *g >= 0.0));
            assert_eq!(d, (32, true));
            for path in &paths.paths {
                assert!(path.aod.abs() <= FRAC_PI_2);
            }
        }
    }

    #[test]
    fn channel_of_zero_gains_is_zero() {
        let arr = ArrayConfig::half_wavelength(4).unwrap();
        let basis = beamspace_basis(&arr);
        let mut p = profile(vec![1.0, 0.0, 0.0, 0.0]);
        p.beam_gains = vec![0.0; 4];
        let mut rng = stream(2, Domain::Aux, 0);
        let f = SmallScaleFading::draw(&mut rng, 4);
        let h = channel_vector(&p, &f, &basis).unwrap();
        assert!(h.h.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_beam_channel_is_the_base_beam() {
        let basis = beamspace_basis(&ArrayConfig::half_wavelength(8).unwrap());
        let mut gains = vec![0.0; 8];
        gains[3] = 1.0;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 8];
        coeffs[3] = Complex64::new(1.0, 0.0);
        let h = channel_vector(&profile(gains), &SmallScaleFading { coeffs }, &basis).unwrap();
        for (a, b) in h.h.iter().zip(basis.column(3)) {
            assert!(close(*a, *b, 1e-15));
        }
    }

    #[test]
    fn channel_norm_matches_channel_gain() {
        let arr = ArrayConfig::half_wavelength(16).unwrap();
        let basis = beamspace_basis(&arr);
        for i in 0..20 {
            let mut rng = stream(11, Domain::Aux, i);
            let (p, _) = generate_ue_profile(&mut rng, &ChannelParams::default(), &arr, UeId(0), 1.0).unwrap();
            let f = SmallScaleFading::draw(&mut rng, 16);
            let h = channel_vector(&p, &f, &basis).unwrap();
            let norm: f64 = h.h.iter().map(|z| z.norm_sqr()).sum();
            let direct: f64 = (0..16).map(|c| p.beam_gains[c] * f.coeffs[c].norm_sqr()).sum();
            let gain = channel_gain(&p, &f).unwrap();
            assert!((norm - direct).abs() < 1e-10 * direct.max(1.0));
            assert!((gain - direct).abs() < 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let basis = beamspace_basis(&ArrayConfig::half_wavelength(8).unwrap());
        let f = SmallScaleFading { coeffs: vec![Complex64::new(1.0, 0.0); 4] };
        let p = profile(vec![1.0; 8]);
        assert!(matches!(channel_vector(&p, &f, &basis), Err(Error::Dimension { .. })));
        assert!(matches!(channel_gain(&p, &f), Err(Error::Dimension { .. })));
    }

    #[test]
    fn channel_gain_simple_cases() {
        let p = profile(vec![1.0; 4]);
        let zeros = SmallScaleFading { coeffs: vec![Complex64::new(0.0, 0.0); 4] };
        let ones = SmallScaleFading { coeffs: vec![Complex64::new(1.0, 0.0); 4] };
        assert_eq!(channel_gain(&p, &zeros).unwrap(), 0.0);
        assert!((channel_gain(&p, &ones).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn correlation_of_identity_gains() {
        let basis = beamspace_basis(&ArrayConfig::half_wavelength(8).unwrap());
        let r = correlation_matrix(&profile(vec![1.0; 8]), &basis).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((r.get(i, j) - t).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn correlation_of_single_beam_is_rank_one() {
        let basis = beamspace_basis(&ArrayConfig::half_wavelength(8).unwrap());
        let mut gains = vec![0.0; 8];
        gains[2] = 2.5;
        let r = correlation_matrix(&profile(gains), &basis).unwrap();
        let u = basis.column(2);
        for i in 0..8 {
            for j in 0..8 {
                assert!((r.get(i, j) - u[i] * u[j].conj() * 2.5).norm() < 1e-12);
            }
        }
        assert!((r.trace().re - 2.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_from_deterministic_realizations() {
        let basis = beamspace_basis(&ArrayConfig::half_wavelength(8).unwrap());
        let h: Vec<Complex64> = basis.column(4).iter().map(|z| z * 3f64.sqrt()).collect();
        let est = estimate_beam_gains(&vec![ChannelVector { h }; 5], &basis).unwrap();
        for (i, e) in est.iter().enumerate() {
            if i == 4 {
                assert!((e - 3.0).abs() < 1e-12);
            } else {
                assert!(e.abs() < 1e-12);
            }
        }
        assert!(matches!(estimate_beam_gains(&[], &basis), Err(Error::Argument(_))));
    }

    #[test]
    fn estimate_from_one_realization_is_beamspace_power() {
        let basis = beamspace_basis(&ArrayConfig::half_wavelength(8).unwrap());
        let mut rng = stream(5, Domain::Aux, 0);
        let h: Vec<Complex64> = (0..8).map(|_| complex_normal(&mut rng)).collect();
        let est = estimate_beam_gains(&[ChannelVector { h: h.clone() }], &basis).unwrap();
        for (c, e) in est.iter().enumerate() {
            let direct: Complex64 = basis.column(c).iter().zip(&h).map(|(u, x)| u.conj() * x).sum();
            assert!((e - direct.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn fold_angle_stays_in_range() {
        for k in -100..=100 {
            let t = k as f64 * 0.1;
            let f = fold_angle(t);
            assert!(f.abs() <= FRAC_PI_2);
            assert!((f.sin() - t.sin()).abs() < 1e-12);
        }
    }
}
