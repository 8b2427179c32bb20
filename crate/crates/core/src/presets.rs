//! Named obstacles for experiment configs.
//!
//! | name              | field                                            |
//! |-------------------|--------------------------------------------------|
//! | `const`, `const-c<c>` | the constant `c` (default 0)                 |
//! | `cos-a<a>`        | `a cos(2 pi x_1)`                                |
//! | `cos-a<a>-x`      | same as `cos-a<a>`                               |
//! | `cos-a<a>-y`      | `a cos(2 pi y_1)`                                |
//! | `cossum-a<a>`     | `a sum_j cos(2 pi x_j)`                          |
//! | `random-a<a>-k<k>`| band-limited, `|k_i| <= k` per axis, sup norm `a`, drawn from the run seed |
//! | `file:<path>`     | a text or binary field dump                      |

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::torus::{io, Grid, GridField};

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Const(f64),
    /// `a cos(2 pi t)` with `t` the real axis `axis`.
    Cos { amp: f64, axis: usize },
    CosSum(f64),
    Random { amp: f64, kmax: usize },
    File(PathBuf),
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown obstacle preset `{s}`"));
        let num = |t: &str| t.parse::<f64>().ok().filter(|x| x.is_finite());
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(Preset::File(PathBuf::from(path)));
        }
        if s == "const" {
            return Ok(Preset::Const(0.0));
        }
        if let Some(c) = s.strip_prefix("const-c") {
            return num(c).map(Preset::Const).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix("cossum-a") {
            return num(rest).map(Preset::CosSum).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix("cos-a") {
            let (amp, axis) = match rest.rsplit_once('-') {
                Some((a, "x")) => (a, 0),
                Some((a, "y")) => (a, 1),
                _ => (rest, 0),
            };
            return num(amp).map(|amp| Preset::Cos { amp, axis }).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix("random-a") {
            let (a, k) = rest.split_once("-k").ok_or_else(bad)?;
            let kmax = k.parse::<usize>().ok().filter(|&k| k >= 1).ok_or_else(bad)?;
            return num(a).map(|amp| Preset::Random { amp, kmax }).ok_or_else(bad);
        }
        Err(bad())
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Const(c) => write!(f, "const-c{c}"),
            Preset::Cos { amp, axis: 0 } => write!(f, "cos-a{amp}"),
            Preset::Cos { amp, .. } => write!(f, "cos-a{amp}-y"),
            Preset::CosSum(a) => write!(f, "cossum-a{a}"),
            Preset::Random { amp, kmax } => write!(f, "random-a{amp}-k{kmax}"),
            Preset::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl Preset {
    /// Sample the preset on `grid`. `seed` drives `random-*`; other presets ignore it.
    pub fn build(&self, grid: &Grid, seed: u64) -> Result<GridField> {
        match self {
            Preset::Const(c) => Ok(grid.constant(*c)),
            Preset::Cos { amp, axis } => grid.sample(|x| amp * (2.0 * PI * x[*axis]).cos()),
            Preset::CosSum(a) => {
                let n = grid.complex_dim();
                grid.sample(|x| a * (0..n).map(|j| (2.0 * PI * x[2 * j]).cos()).sum::<f64>())
            }
            Preset::Random { amp, kmax } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                random_band_limited(grid, *amp, *kmax, &mut rng)
            }
            Preset::File(path) => {
                let bytes = fs::read(path).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => Error::MissingArtifact(path.clone()),
                    _ => Error::Io(e),
                })?;
                let field = if bytes.starts_with(io::BINARY_MAGIC) {
                    io::read_binary(&bytes[..], grid.geometry())?
                } else {
                    io::read_text(&bytes[..], grid.geometry())?
                };
                if field.grid().res() != grid.res() {
                    return Err(Error::InvalidArgument(format!(
                        "{} has resolution {}, config asks for {}",
                        path.display(),
                        field.grid().res(),
                        grid.res()
                    )));
                }
                Ok(field)
            }
        }
    }
}

/// Random trigonometric polynomial with wavevectors `|k_i| <= kmax`, rescaled to sup norm `amp`.
///
/// Coefficients decay like `1 / (1 + |k|^2)` so the fields stay comparable across `kmax`.
pub fn random_band_limited<R: Rng>(grid: &Grid, amp: f64, kmax: usize, rng: &mut R) -> Result<GridField> {
    let d = grid.real_dim();
    if 2 * kmax >= grid.res() {
        return Err(Error::InvalidArgument(format!(
            "band limit {kmax} is not resolved on N = {}",
            grid.res()
        )));
    }
    let k = kmax as i64;
    let mut modes = Vec::new();
    let mut wv = vec![-k; d];
    loop {
        if wv.iter().any(|&x| x != 0) {
            let norm2: i64 = wv.iter().map(|x| x * x).sum();
            let scale = 1.0 / (1.0 + norm2 as f64);
            let a: f64 = rng.random_range(-1.0..1.0) * scale;
            let b: f64 = rng.random_range(-1.0..1.0) * scale;
            modes.push((wv.clone(), a, b));
        }
        let mut axis = 0;
        while axis < d {
            wv[axis] += 1;
            if wv[axis] <= k {
                break;
            }
            wv[axis] = -k;
            axis += 1;
        }
        if axis == d {
            break;
        }
    }
    let raw = grid.sample(|x| {
        modes
            .iter()
            .map(|(wv, a, b)| {
                let t = 2.0 * PI * wv.iter().zip(x).map(|(k, x)| *k as f64 * x).sum::<f64>();
                a * t.cos() + b * t.sin()
            })
            .sum()
    })?;
    let sup = raw.sup_norm();
    Ok(if sup > 0.0 { raw.scale(amp / sup) } else { raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::TorusGeometry;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["const-c0.25", "cos-a0.3", "cos-a0.3-y", "cossum-a0.3", "random-a0.2-k3", "file:/tmp/x"] {
            let p: Preset = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert_eq!("const".parse::<Preset>().unwrap(), Preset::Const(0.0));
        assert_eq!("cos-a0.3-x".parse::<Preset>().unwrap(), Preset::Cos { amp: 0.3, axis: 0 });
        for bad in ["cos", "cos-a", "cos-anan", "random-a0.1", "random-a0.1-k0", "sin-a1"] {
            assert!(bad.parse::<Preset>().is_err(), "{bad}");
        }
    }

    #[test]
    fn random_fields_are_seeded_and_normalized() {
        let g = Grid::new(TorusGeometry::flat(1).unwrap(), 32).unwrap();
        let p = Preset::Random { amp: 0.2, kmax: 3 };
        let a = p.build(&g, 7).unwrap();
        assert_eq!(a, p.build(&g, 7).unwrap());
        assert_ne!(a, p.build(&g, 8).unwrap());
        assert!((a.sup_norm() - 0.2).abs() < 1e-15);
    }
}
