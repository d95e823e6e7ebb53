//! Training objectives on frame pairs.
//!
//! The main objective sums, over both frames of a pair, the squared
//! reconstruction error from the hidden units and an L1 penalty on those units,
//! and adds `β Σ_i |z_a,i − z_b,i|`, the slowness penalty on pooled features.
//! The contrastive baseline pulls temporal neighbours together and pushes
//! non-neighbours at least `margin` apart. Both share one set of Siamese weights:
//! gradients from the two branches are summed.

mod conv;
mod full;
mod gradcheck;

use std::ops::AddAssign;

pub use conv::{conv_backward, conv_full_loss, conv_loss_and_grad, ConvGradients};
pub use full::{backward, drlim_loss_and_grad, full_loss, loss_and_grad, Gradients};
pub(crate) use full::{drlim_step, full_step};
pub use gradcheck::{grad_check, random_instance, relative_error, GradCheckReport};

use crate::error::{Error, Result};
use crate::numerics::Image;

/// Loss weights, margin, norm order and optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    /// L1 weight on hidden activations.
    pub alpha: f64,
    /// Slowness weight on pooled features.
    pub beta: f64,
    /// Contrastive margin for non-neighbour pairs.
    pub margin: f64,
    /// Norm order for pooling and for feature distances.
    pub p: f64,
    /// Floor on pooled norms in derivative denominators.
    pub eps: f64,
    pub lr: f64,
    pub momentum: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
            margin: 1.0,
            p: 2.0,
            eps: 1e-8,
            lr: 1e-3,
            momentum: 0.9,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad =
            |what: &str, v: f64| Err(Error::InvalidArgument(format!("{what} out of range: {v}")));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha", self.alpha);
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta", self.beta);
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin", self.margin);
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return bad("p", self.p);
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps", self.eps);
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr", self.lr);
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", self.momentum);
        }
        Ok(())
    }

    pub(crate) fn require_p2(&self, op: &str) -> Result<()> {
        if self.p != 2.0 {
            return Err(Error::Unsupported(format!(
                "{op} has analytic gradients only for p = 2, got p = {}",
                self.p
            )));
        }
        Ok(())
    }
}

/// Two frames and their temporal distance `|t − t'|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub a: Image,
    pub b: Image,
    pub gap: usize,
}

impl FramePair {
    pub fn new(a: Image, b: Image, gap: usize) -> Result<Self> {
        if a.dims() != b.dims() {
            return Err(Error::shape(
                "FramePair::new",
                format!("second frame {}x{}", a.height(), a.width()),
                format!("{}x{}", b.height(), b.width()),
            ));
        }
        if gap == 0 {
            return Err(Error::InvalidArgument("temporal gap must be >= 1".into()));
        }
        Ok(Self { a, b, gap })
    }

    pub fn is_neighbor(&self) -> bool {
        self.gap == 1
    }

    /// The same pair with the frames exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            a: self.b.clone(),
            b: self.a.clone(),
            gap: self.gap,
        }
    }
}

/// Loss split into its terms. `contrastive` is only non-zero for the
/// contrastive baseline, which reports its neighbour pull under `slowness`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub recon: f64,
    pub sparsity: f64,
    pub slowness: f64,
    pub contrastive: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn scaled(self, s: f64) -> Self {
        Self {
            recon: self.recon * s,
            sparsity: self.sparsity * s,
            slowness: self.slowness * s,
            contrastive: self.contrastive * s,
            total: self.total * s,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.recon,
            self.sparsity,
            self.slowness,
            self.contrastive,
            self.total,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

impl AddAssign for LossBreakdown {
    fn add_assign(&mut self, o: Self) {
        self.recon += o.recon;
        self.sparsity += o.sparsity;
        self.slowness += o.slowness;
        self.contrastive += o.contrastive;
        self.total += o.total;
    }
}

/// `‖a − b‖_p`.
pub fn feature_distance(a: &[f64], b: &[f64], p: f64) -> f64 {
    crate::model::p_norm(a.iter().zip(b).map(|(x, y)| x - y), p)
}

/// Contrastive loss on pooled features: `‖z_a − z_b‖_p` for neighbours
/// (`gap = 1`), `max(0, margin − ‖z_a − z_b‖_p)` otherwise.
pub fn drlim_loss(z_a: &[f64], z_b: &[f64], gap: usize, hyper: &Hyperparams) -> Result<f64> {
    if z_a.len() != z_b.len() {
        return Err(Error::shape(
            "drlim_loss",
            format!("second feature vector of length {}", z_a.len()),
            format!("length {}", z_b.len()),
        ));
    }
    if gap == 0 {
        return Err(Error::InvalidArgument("temporal gap must be >= 1".into()));
    }
    let d = feature_distance(z_a, z_b, hyper.p);
    Ok(if gap == 1 {
        d
    } else {
        (hyper.margin - d).max(0.0)
    })
}

#[inline]
pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hyper(margin: f64) -> Hyperparams {
        Hyperparams {
            margin,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn drlim_by_hand() {
        let h = hyper(2.0);
        assert_eq!(drlim_loss(&[0.3, 0.4], &[0.3, 0.4], 1, &h).unwrap(), 0.0);
        assert_eq!(
            drlim_loss(&[1.0, 1.0], &[0.0, 0.0], 1, &h).unwrap(),
            2f64.sqrt()
        );
        assert_eq!(drlim_loss(&[0.5, 0.0], &[0.0, 0.0], 3, &h).unwrap(), 1.5);
        assert_eq!(drlim_loss(&[2.0, 0.0], &[0.0, 0.0], 3, &h).unwrap(), 0.0);
        assert_eq!(drlim_loss(&[3.0, 0.0], &[0.0, 0.0], 2, &h).unwrap(), 0.0);
    }

    #[test]
    fn drlim_rejects_bad_input() {
        let h = hyper(1.0);
        assert!(drlim_loss(&[1.0], &[1.0, 2.0], 1, &h).is_err());
        assert!(drlim_loss(&[1.0], &[1.0], 0, &h).is_err());
    }

    #[test]
    fn hyperparams_validation() {
        assert!(Hyperparams::default().validate().is_ok());
        for bad in [
            Hyperparams {
                alpha: -1.0,
                ..Default::default()
            },
            Hyperparams {
                margin: 0.0,
                ..Default::default()
            },
            Hyperparams {
                p: 0.5,
                ..Default::default()
            },
            Hyperparams {
                eps: 0.0,
                ..Default::default()
            },
            Hyperparams {
                momentum: 1.0,
                ..Default::default()
            },
            Hyperparams {
                lr: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn frame_pair_checks() {
        assert!(FramePair::new(Image::zeros(2, 2), Image::zeros(2, 3), 1).is_err());
        assert!(FramePair::new(Image::zeros(2, 2), Image::zeros(2, 2), 0).is_err());
    }

    proptest! {
        #[test]
        fn drlim_ranges(z in proptest::collection::vec(-2.0f64..2.0, 6), gap in 1usize..5, m in 0.1f64..3.0) {
            let h = hyper(m);
            let (a, b) = z.split_at(3);
            let l = drlim_loss(a, b, gap, &h).unwrap();
            prop_assert!(l >= 0.0);
            if gap > 1 {
                prop_assert!(l <= m);
            } else {
                prop_assert_eq!(l == 0.0, a == b);
            }
        }
    }
}
