use super::{FnoError, PsiFno};

/// Single network equal to `outer ∘ inner`.
///
/// Both are padded to the larger lift. The pointwise map `R_outer Q_inner` between them is
/// absorbed into the first outer layer (or into the projection when `outer` has no layers),
/// so the depth is exactly the sum of depths.
pub fn compose(outer: &PsiFno, inner: &PsiFno) -> Result<PsiFno, FnoError> {
    if inner.d_u() != outer.d_a() {
        return Err(FnoError::Dimension(format!(
            "inner network outputs {} channels, outer expects {}",
            inner.d_u(),
            outer.d_a()
        )));
    }
    if inner.grid() != outer.grid() {
        return Err(FnoError::Dimension("networks live on different grids".into()));
    }
    if inner.activation() != outer.activation() {
        return Err(FnoError::Dimension(format!(
            "activations differ ({} vs {})",
            outer.activation().name(),
            inner.activation().name()
        )));
    }
    let dim = outer.d_v().max(inner.d_v());
    let (dvo, dvi, mid) = (outer.d_v(), inner.d_v(), inner.d_u());

    // M = R_outer · Q_inner, padded to dim×dim
    let mut m = vec![0.0; dim * dim];
    for r in 0..dvo {
        for c in 0..dvi {
            m[r * dim + c] = (0..mid)
                .map(|k| outer.lift_matrix()[r * mid + k] * inner.projection()[k * dvi + c])
                .sum();
        }
    }

    let d_a = inner.d_a();
    let mut lift = vec![0.0; dim * d_a];
    lift[..dvi * d_a].copy_from_slice(inner.lift_matrix());

    let mut layers: Vec<_> = inner.layers().iter().map(|l| l.padded(dim)).collect();
    let d_u = outer.d_u();
    let mut projection = vec![0.0; d_u * dim];
    let outer_layers = outer.layers();
    if outer_layers.is_empty() {
        // Q_outer · M
        for r in 0..d_u {
            for c in 0..dim {
                projection[r * dim + c] = (0..dvo)
                    .map(|k| outer.projection()[r * dvo + k] * m[k * dim + c])
                    .sum();
            }
        }
    } else {
        layers.push(outer_layers[0].padded(dim).precomposed(&m));
        layers.extend(outer_layers[1..].iter().map(|l| l.padded(dim)));
        for r in 0..d_u {
            projection[r * dim..r * dim + dvo]
                .copy_from_slice(&outer.projection()[r * dvo..(r + 1) * dvo]);
        }
    }
    PsiFno::new(outer.grid(), d_a, d_u, lift, layers, projection, outer.activation())
}
