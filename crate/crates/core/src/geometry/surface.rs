//! Implicit surfaces. Positive values are fluid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait ImplicitSurface: Send + Sync {
    fn value(&self, p: [f64; 3]) -> f64;
}

impl<F: Fn([f64; 3]) -> f64 + Send + Sync> ImplicitSurface for F {
    fn value(&self, p: [f64; 3]) -> f64 {
        self(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Surface {
    /// No embedded boundary.
    None,
    /// Terrain `z = peak / (1 + ((x - center) / half_width)^2)`, fluid above.
    AgnesiRidge { peak: f64, half_width: f64, center: f64 },
    /// Solid ball, fluid outside.
    Hemisphere { center: [f64; 3], radius: f64 },
    /// Solid square column of side `width` and total height `height` centered at `center`.
    Box { center: [f64; 3], width: f64, height: f64 },
    /// Half space, fluid on the side `normal` points to.
    Plane { normal: [f64; 3], point: [f64; 3] },
}

impl Surface {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("surface parameter {name} must be positive, got {v}")))
            }
        };
        match self {
            Surface::None => Ok(()),
            Surface::AgnesiRidge { peak, half_width, center } => {
                positive("peak", *peak)?;
                positive("half_width", *half_width)?;
                if !center.is_finite() {
                    return Err(Error::InvalidInput("ridge center must be finite".into()));
                }
                Ok(())
            }
            Surface::Hemisphere { radius, .. } => positive("radius", *radius),
            Surface::Box { width, height, .. } => {
                positive("width", *width)?;
                positive("height", *height)
            }
            Surface::Plane { normal, .. } => {
                let n = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
                positive("|normal|", n)
            }
        }
    }

    pub fn terrain_height(peak: f64, half_width: f64, x: f64) -> f64 {
        let s = x / half_width;
        peak / (1.0 + s * s)
    }
}

impl ImplicitSurface for Surface {
    fn value(&self, p: [f64; 3]) -> f64 {
        match self {
            Surface::None => 1.0,
            Surface::AgnesiRidge { peak, half_width, center } => {
                p[2] - Surface::terrain_height(*peak, *half_width, p[0] - center)
            }
            Surface::Hemisphere { center, radius } => {
                let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() - radius
            }
            Surface::Box { center, width, height } => {
                let half = [0.5 * width, 0.5 * width, 0.5 * height];
                (0..3)
                    .map(|a| (p[a] - center[a]).abs() - half[a])
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Surface::Plane { normal, point } => {
                (0..3).map(|a| normal[a] * (p[a] - point[a])).sum()
            }
        }
    }
}
