use crate::error::{Error, Result};

/// A container of trainable parameter blocks.
///
/// Blocks are visited in a fixed declaration order. Gradient bundles are
/// values of the same type, so congruence between a parameter set and its
/// gradients reduces to comparing block lengths.
pub trait ParamSet {
    /// Named blocks in declaration order.
    fn blocks(&self) -> Vec<(String, &[f64])>;

    /// Mutable blocks in the same order as [`ParamSet::blocks`].
    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;

    /// A congruent container filled with zeros.
    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    fn fill_zero(&mut self) {
        for b in self.blocks_mut() {
            b.fill(0.0);
        }
    }

    fn scale(&mut self, factor: f64) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// `self += other`, block by block.
    fn accumulate(&mut self, other: &Self) -> Result<()>
    where
        Self: Sized,
    {
        check_congruent(self, other)?;
        let src = other.blocks();
        for (dst, (_, src)) in self.blocks_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        Ok(())
    }

    /// Flattened copy of every parameter.
    fn to_flat(&self) -> Vec<f64> {
        self.blocks().into_iter().flat_map(|(_, b)| b.iter().copied()).collect()
    }

    /// Overwrite every parameter from a flat slice produced by [`ParamSet::to_flat`].
    fn copy_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        let total = self.num_params();
        if flat.len() != total {
            return Err(Error::Shape(format!("flat parameter vector has {} values, expected {total}", flat.len())));
        }
        let mut offset = 0;
        for b in self.blocks_mut() {
            b.copy_from_slice(&flat[offset..offset + b.len()]);
            offset += b.len();
        }
        Ok(())
    }
}

pub(crate) fn check_congruent<A: ParamSet + ?Sized, B: ParamSet + ?Sized>(a: &A, b: &B) -> Result<()> {
    let (ba, bb) = (a.blocks(), b.blocks());
    if ba.len() != bb.len() {
        return Err(Error::Shape(format!("parameter sets have {} and {} blocks", ba.len(), bb.len())));
    }
    for ((name, x), (_, y)) in ba.iter().zip(&bb) {
        if x.len() != y.len() {
            return Err(Error::Shape(format!("block {name}: {} vs {} values", x.len(), y.len())));
        }
    }
    Ok(())
}

/// Prefix every block name of `inner` with `prefix.`.
pub(crate) fn prefixed<'a>(prefix: &str, inner: Vec<(String, &'a [f64])>) -> Vec<(String, &'a [f64])> {
    inner.into_iter().map(|(n, b)| (format!("{prefix}.{n}"), b)).collect()
}
