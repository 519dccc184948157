use serde::{Deserialize, Serialize};

use super::AffordanceError;

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, AffordanceError> {
        if !(fx > 0.0 && fy > 0.0) || ![fx, fy, cx, cy].iter().all(|v| v.is_finite()) {
            return Err(AffordanceError::InvalidInput(
                "focal lengths must be positive".into(),
            ));
        }
        Ok(CameraIntrinsics { fx, fy, cx, cy })
    }

    pub fn project(&self, point: &[f64; 3]) -> [f64; 2] {
        [
            self.fx * point[0] / point[2] + self.cx,
            self.fy * point[1] / point[2] + self.cy,
        ]
    }
}

/// Back-projects a pixel at `depth` meters into the camera frame.
pub fn deproject(
    pixel: [f64; 2],
    depth: f64,
    k: &CameraIntrinsics,
) -> Result<[f64; 3], AffordanceError> {
    if !(depth.is_finite() && depth > 0.0) {
        return Err(AffordanceError::InvalidDepth(depth));
    }
    Ok([
        (pixel[0] - k.cx) * depth / k.fx,
        (pixel[1] - k.cy) * depth / k.fy,
        depth,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_point() {
        let k = CameraIntrinsics::new(615.0, 612.0, 318.0, 242.0).unwrap();
        assert_eq!(deproject([318.0, 242.0], 0.5, &k).unwrap(), [0.0, 0.0, 0.5]);
    }

    #[test]
    fn hand_computed_offset() {
        // (920 - 320) * 1.2 / 600 = 1.2
        let k = CameraIntrinsics::new(600.0, 600.0, 320.0, 320.0).unwrap();
        let p = deproject([920.0, 320.0], 1.2, &k).unwrap();
        assert!((p[0] - 1.2).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[2], 1.2);
    }

    #[test]
    fn non_positive_depth() {
        let k = CameraIntrinsics::new(600.0, 600.0, 320.0, 320.0).unwrap();
        assert!(matches!(
            deproject([0.0, 0.0], 0.0, &k),
            Err(AffordanceError::InvalidDepth(_))
        ));
        assert!(deproject([0.0, 0.0], -1.0, &k).is_err());
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0).is_err());
    }
}
