//! Target rotation specs accepted on the command line.
//!
//! ```text
//! quat:a,b,c,d              vector part first, scalar last
//! axis-angle:x,y,z:angle
//! matrix:m11,m12,...,m33    row-major
//! euler:X=0.3,Y=-1.2,Z=0.5  lab axes, applied left to right
//! ```

use anyhow::{anyhow, bail, Context, Result};
use twoaxis::rotations::{quat_exp, quat_product, so3_to_su2, Mat3, Quat, Rot3, Vec3};

/// Orthonormality tolerance for matrix targets.
const MATRIX_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Quat(Quat),
    AxisAngle(Vec3, f64),
    Matrix([f64; 9]),
    Euler(Vec<(char, f64)>),
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("not a number: {x:?}")))
        .collect()
}

fn exactly<const N: usize>(s: &str) -> Result<[f64; N]> {
    let v = numbers(s)?;
    v.try_into().map_err(|v: Vec<f64>| anyhow!("expected {N} numbers, got {}", v.len()))
}

impl TargetSpec {
    /// Parses a spec; `degrees` converts angles only.
    pub fn parse(spec: &str, degrees: bool) -> Result<TargetSpec> {
        let scale = if degrees { std::f64::consts::PI / 180.0 } else { 1.0 };
        let (kind, body) = spec.split_once(':').ok_or_else(|| anyhow!("target must look like kind:values, got {spec:?}"))?;
        match kind {
            "quat" => Ok(TargetSpec::Quat(Quat::from_array(exactly::<4>(body)?))),
            "axis-angle" => {
                let (axis, angle) = body.rsplit_once(':').ok_or_else(|| anyhow!("axis-angle needs x,y,z:angle"))?;
                let [x, y, z] = exactly::<3>(axis)?;
                let angle: f64 = angle.trim().parse().with_context(|| format!("not a number: {angle:?}"))?;
                Ok(TargetSpec::AxisAngle(Vec3::new(x, y, z), angle * scale))
            }
            "matrix" => Ok(TargetSpec::Matrix(exactly::<9>(body)?)),
            "euler" => {
                let word = body
                    .split(',')
                    .map(|item| {
                        let (axis, angle) = item.split_once('=').ok_or_else(|| anyhow!("euler items look like X=angle"))?;
                        let axis = match axis.trim() {
                            "X" | "x" => 'X',
                            "Y" | "y" => 'Y',
                            "Z" | "z" => 'Z',
                            other => bail!("unknown euler axis {other:?}"),
                        };
                        let angle: f64 = angle.trim().parse().with_context(|| format!("not a number: {angle:?}"))?;
                        Ok((axis, angle * scale))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(TargetSpec::Euler(word))
            }
            other => bail!("unknown target kind {other:?} (quat, axis-angle, matrix, euler)"),
        }
    }

    /// Unit quaternion for the spec.
    pub fn to_quat(&self) -> Result<Quat> {
        match self {
            TargetSpec::Quat(q) => {
                let n = q.norm();
                if !(n.is_finite() && n > 0.0) {
                    bail!("quaternion has zero or non-finite norm");
                }
                Ok(q.normalize())
            }
            TargetSpec::AxisAngle(axis, t) => {
                let u = axis.normalized().ok_or_else(|| anyhow!("zero rotation axis"))?;
                Ok(quat_exp(u * (0.5 * t)))
            }
            TargetSpec::Matrix(m) => {
                let rows = [[m[0], m[1], m[2]], [m[3], m[4], m[5]], [m[6], m[7], m[8]]];
                let r = Rot3::try_from_matrix(Mat3::from_rows(rows), MATRIX_TOL)?;
                Ok(so3_to_su2(&r))
            }
            TargetSpec::Euler(word) => Ok(quat_product(word.iter().map(|&(axis, t)| {
                let e = match axis {
                    'X' => Vec3::E1,
                    'Y' => Vec3::E2,
                    _ => Vec3::E3,
                };
                quat_exp(e * (0.5 * t))
            }))),
        }
    }
}

pub fn parse_quat(spec: &str) -> Result<Quat> {
    let body = spec.strip_prefix("quat:").unwrap_or(spec);
    TargetSpec::Quat(Quat::from_array(exactly::<4>(body)?)).to_quat()
}

pub fn parse_vec3(spec: &str) -> Result<Vec3> {
    let [x, y, z] = exactly::<3>(spec)?;
    Ok(Vec3::new(x, y, z))
}
