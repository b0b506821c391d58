//! Bundles of affine fibers over finite point sets.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::jets::{JetShape, JetVec, Polynomial};
use crate::linspaces::AffineFiber;

/// A finite point set with one affine fiber per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    shape: JetShape,
    points: Vec<Vec<f64>>,
    fibers: Vec<AffineFiber>,
}

pub(crate) fn validate_points(n: usize, points: &[Vec<f64>]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.len(),
                context: "point coordinates",
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite point coordinate".into()));
        }
    }
    for i in 1..points.len() {
        if points[..i].iter().any(|q| q == &points[i]) {
            return Err(Error::DuplicatePoint(i));
        }
    }
    Ok(())
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl Bundle {
    pub fn new(shape: JetShape, points: Vec<Vec<f64>>, fibers: Vec<AffineFiber>) -> Result<Self> {
        validate_points(shape.n, &points)?;
        if fibers.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: fibers.len(),
                context: "number of fibers",
            });
        }
        for f in &fibers {
            if let Some(b) = f.base() {
                if b.len() != shape.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: shape.dim(),
                        found: b.len(),
                        context: "fiber ambient dimension",
                    });
                }
            }
        }
        Ok(Self {
            shape,
            points,
            fibers,
        })
    }

    /// Fibers `{P⃗ : Σ_j P_j(x) f_j(x) = φ(x)}`.
    pub fn from_bhk(inst: &BhkInstance, m: usize) -> Result<Self> {
        let n = inst.nvars();
        let d = inst.d();
        let shape = JetShape::new(m, n, d);
        let sd = shape.scalar_dim();
        let fibers = (0..inst.points.len())
            .map(|k| {
                let fk: Vec<f64> = inst.f_values.iter().map(|row| row[k]).collect();
                let phi = inst.phi_values[k];
                if fk.iter().all(|&v| v == 0.0) {
                    return if phi == 0.0 {
                        AffineFiber::full(shape.dim())
                    } else {
                        AffineFiber::Empty
                    };
                }
                let mut c = DMatrix::zeros(1, shape.dim());
                for (j, &v) in fk.iter().enumerate() {
                    c[(0, j * sd)] = v;
                }
                AffineFiber::from_constraints(&c, &DVector::from_vec(vec![phi]), 1e-12)
                    .expect("single row constraint")
            })
            .collect();
        Self::new(shape, inst.points.clone(), fibers)
    }

    /// Fibers `{P : P(x) = f(x)}` for scalar data.
    pub fn from_interpolation(points: Vec<Vec<f64>>, values: &[f64], m: usize) -> Result<Self> {
        let n = points.first().ok_or(Error::EmptyPointSet)?.len();
        if values.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: values.len(),
                context: "interpolation values",
            });
        }
        let inst = BhkInstance::new(points, vec![vec![1.0; values.len()]], values.to_vec())?;
        debug_assert_eq!(inst.nvars(), n);
        Self::from_bhk(&inst, m)
    }

    pub fn shape(&self) -> JetShape {
        self.shape
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn fibers(&self) -> &[AffineFiber] {
        &self.fibers
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| p.as_slice() == x)
    }

    /// The stored fiber at `x`.
    pub fn fiber(&self, x: &[f64]) -> Result<&AffineFiber> {
        self.index_of(x).map(|i| &self.fibers[i]).ok_or(Error::UnknownPoint)
    }

    pub fn fiber_at(&self, i: usize) -> &AffineFiber {
        &self.fibers[i]
    }

    /// Index of the first empty fiber in point order.
    pub fn first_empty(&self) -> Option<usize> {
        self.fibers.iter().position(|f| f.is_empty())
    }

    /// Per-point dimensions, `-1` for empty.
    pub fn dims(&self) -> Vec<i64> {
        self.fibers.iter().map(|f| f.signed_dim()).collect()
    }

    pub fn with_fibers(&self, fibers: Vec<AffineFiber>) -> Result<Bundle> {
        Bundle::new(self.shape, self.points.clone(), fibers)
    }

    /// Whether `jets[i]` lies in fiber `i` for every point.
    pub fn is_section(&self, jets: &[JetVec], tol: f64) -> bool {
        jets.len() == self.len()
            && self
                .fibers
                .iter()
                .zip(jets)
                .all(|(f, j)| f.contains_jet(j, tol))
    }

    /// Distance of each polynomial jet `J^m_x F` to the fiber at `x`.
    pub fn polynomial_residuals(&self, f: &[Polynomial]) -> Result<Vec<f64>> {
        if f.len() != self.shape.d {
            return Err(Error::DimensionMismatch {
                expected: self.shape.d,
                found: f.len(),
                context: "section components",
            });
        }
        self.points
            .iter()
            .zip(&self.fibers)
            .map(|(x, fib)| {
                let comps = f
                    .iter()
                    .map(|p| p.jet(x, self.shape.m))
                    .collect::<Result<Vec<_>>>()?;
                Ok(fib.distance(&DVector::from_vec(JetVec::new(comps)?.flatten())))
            })
            .collect()
    }
}

/// Data for `Σ_j φ_j f_j = φ` sampled on a finite set.
#[derive(Debug, Clone, PartialEq)]
pub struct BhkInstance {
    pub points: Vec<Vec<f64>>,
    /// `f_values[j][k] = f_j(x_k)`
    pub f_values: Vec<Vec<f64>>,
    pub phi_values: Vec<f64>,
    /// Optional closed forms used to resample the data.
    pub f_polys: Option<Vec<Polynomial>>,
    pub phi_poly: Option<Polynomial>,
}

impl BhkInstance {
    pub fn new(points: Vec<Vec<f64>>, f_values: Vec<Vec<f64>>, phi_values: Vec<f64>) -> Result<Self> {
        let n = points.first().ok_or(Error::EmptyPointSet)?.len();
        if n == 0 {
            return Err(Error::InvalidInput("points need at least one coordinate".into()));
        }
        validate_points(n, &points)?;
        if f_values.is_empty() {
            return Err(Error::InvalidInput("at least one coefficient function is required".into()));
        }
        for row in &f_values {
            if row.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    found: row.len(),
                    context: "f values per point",
                });
            }
        }
        if phi_values.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: phi_values.len(),
                context: "phi values per point",
            });
        }
        if f_values.iter().flatten().chain(&phi_values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite data value".into()));
        }
        Ok(Self {
            points,
            f_values,
            phi_values,
            f_polys: None,
            phi_poly: None,
        })
    }

    /// Samples polynomial `f_j` and `φ` on the given points.
    pub fn from_polynomials(points: Vec<Vec<f64>>, f: Vec<Polynomial>, phi: Polynomial) -> Result<Self> {
        let n = points.first().ok_or(Error::EmptyPointSet)?.len();
        for p in f.iter().chain(std::iter::once(&phi)) {
            if p.nvars() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.nvars(),
                    context: "polynomial variables",
                });
            }
        }
        let f_values = f
            .iter()
            .map(|p| points.iter().map(|x| p.eval(x)).collect())
            .collect();
        let phi_values = points.iter().map(|x| phi.eval(x)).collect();
        let mut inst = Self::new(points, f_values, phi_values)?;
        inst.f_polys = Some(f);
        inst.phi_poly = Some(phi);
        Ok(inst)
    }

    pub fn nvars(&self) -> usize {
        self.points[0].len()
    }

    pub fn d(&self) -> usize {
        self.f_values.len()
    }

    /// `max_k |Σ_j φ_j(x_k) f_j(x_k) − φ(x_k)|` for candidate values `φ_j(x_k)`.
    pub fn section_residual(&self, values: &[Vec<f64>]) -> f64 {
        (0..self.points.len())
            .map(|k| {
                let lhs: f64 = (0..self.d()).map(|j| values[k][j] * self.f_values[j][k]).sum();
                (lhs - self.phi_values[k]).abs()
            })
            .fold(0.0, f64::max)
    }
}
