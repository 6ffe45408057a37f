//! Multi-channel 2-D convolution layers.
//!
//! Every layer computes the valid-region cross-correlation
//!
//! ```text
//! out[m][h][w] = sum_{d,y,x} image[d][h+y][w+x] * kernel[m][d][y][x]
//! ```
//!
//! reduced modulo `2^bits`. Tensor layouts are `image[channels][img_h][img_w]`,
//! `kernel[kernels][channels][k][k]` and `out[kernels][img_h-k+1][img_w-k+1]`.
//!
//! The packed path treats each kernel row as a 1-D kernel sliding along one
//! image row. Row products for all `(d, y)` are accumulated lane-wise per
//! block; seams between blocks are merged once per output row.

use std::thread;

use crate::conv1d::{ConvPlan, LaneWord, SpacerMode};
use crate::error::{Result, SamdError};
use crate::format::{LaneFormat, Layout, Signedness};
use crate::oracle::wrap_value;
use crate::tensor::QuantTensor;

/// Shape of one convolution layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerConfig {
    pub name: String,
    pub img_h: usize,
    pub img_w: usize,
    pub channels: usize,
    /// Output maps.
    pub kernels: usize,
    /// Square kernel size, odd.
    pub k: usize,
}

impl LayerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k % 2 == 0 {
            return Err(SamdError::Shape(format!("{}: kernel size {} is even", self.name, self.k)));
        }
        if self.img_h <= self.k || self.img_w <= self.k {
            return Err(SamdError::Shape(format!(
                "{}: image {}x{} is not larger than the {}x{} kernel",
                self.name, self.img_h, self.img_w, self.k, self.k
            )));
        }
        Ok(())
    }

    pub fn out_h(&self) -> usize {
        self.img_h - self.k + 1
    }

    pub fn out_w(&self) -> usize {
        self.img_w - self.k + 1
    }

    pub fn image_dims(&self) -> Vec<usize> {
        vec![self.channels, self.img_h, self.img_w]
    }

    pub fn kernel_dims(&self) -> Vec<usize> {
        vec![self.kernels, self.channels, self.k, self.k]
    }

    pub fn output_dims(&self) -> Vec<usize> {
        vec![self.kernels, self.out_h(), self.out_w()]
    }

    /// Multiply-accumulates of the direct loop nest.
    pub fn macs(&self) -> u64 {
        (self.kernels * self.out_h() * self.out_w() * self.channels * self.k * self.k) as u64
    }
}

fn check_operands(image: &QuantTensor, kernel: &QuantTensor, cfg: &LayerConfig) -> Result<()> {
    cfg.validate()?;
    if image.dims() != cfg.image_dims() {
        return Err(SamdError::Shape(format!(
            "image dims {:?}, layer {} expects {:?}",
            image.dims(),
            cfg.name,
            cfg.image_dims()
        )));
    }
    if kernel.dims() != cfg.kernel_dims() {
        return Err(SamdError::Shape(format!(
            "kernel dims {:?}, layer {} expects {:?}",
            kernel.dims(),
            cfg.name,
            cfg.kernel_dims()
        )));
    }
    Ok(())
}

/// The direct loop nest with the accumulator reduced modulo `2^acc_bits`
/// after every multiply-accumulate.
pub fn direct_conv2d_reference(
    image: &QuantTensor,
    kernel: &QuantTensor,
    cfg: &LayerConfig,
    acc_bits: u32,
) -> Result<QuantTensor> {
    check_operands(image, kernel, cfg)?;
    if !(2..=8).contains(&acc_bits) {
        return Err(SamdError::LaneWidth(acc_bits));
    }
    let half = cfg.k / 2;
    let mut out = Vec::with_capacity(cfg.output_dims().iter().product());
    for m in 0..cfg.kernels {
        for h in half..cfg.img_h - half {
            for w in half..cfg.img_w - half {
                let mut result = 0i64;
                for d in 0..cfg.channels {
                    for y in 0..cfg.k {
                        for x in 0..cfg.k {
                            let i = image.get(&[d, h + y - half, w + x - half]) as i64;
                            let f = kernel.get(&[m, d, y, x]) as i64;
                            result = wrap_value(result + i * f, acc_bits, Signedness::Signed);
                        }
                    }
                }
                out.push(result as i32);
            }
        }
    }
    QuantTensor::from_values(cfg.output_dims(), acc_bits, Signedness::Signed, &out)
}

/// The same loop nest on native 8-bit integers with wrapping arithmetic.
/// The output holds 8-bit signed results.
pub fn native8_conv2d(image: &QuantTensor, kernel: &QuantTensor, cfg: &LayerConfig) -> Result<QuantTensor> {
    check_operands(image, kernel, cfg)?;
    let (img, ker) = (image.bytes(), kernel.bytes());
    let (ch, ih, iw, k) = (cfg.channels, cfg.img_h, cfg.img_w, cfg.k);
    let half = k / 2;
    let mut out = Vec::with_capacity(cfg.output_dims().iter().product());
    for m in 0..cfg.kernels {
        for h in half..ih - half {
            for w in half..iw - half {
                let mut result = 0u8;
                for d in 0..ch {
                    for y in 0..k {
                        let img_row = &img[(d * ih + h + y - half) * iw + w - half..][..k];
                        let ker_row = &ker[((m * ch + d) * k + y) * k..][..k];
                        for x in 0..k {
                            result = result.wrapping_add(img_row[x].wrapping_mul(ker_row[x]));
                        }
                    }
                }
                out.push(result);
            }
        }
    }
    Ok(QuantTensor::from_raw(cfg.output_dims(), 8, Signedness::Signed, out))
}

/// Packed convolution, single-threaded. `format` gives the lane width and
/// stride; outputs are reduced modulo `2^bits`.
pub fn samd_conv2d(
    image: &QuantTensor,
    kernel: &QuantTensor,
    cfg: &LayerConfig,
    format: LaneFormat,
    mode: SpacerMode,
) -> Result<QuantTensor> {
    samd_conv2d_threads(image, kernel, cfg, format, mode, 1)
}

/// [`samd_conv2d`] with output maps split over `threads` workers. The
/// result does not depend on the worker count.
pub fn samd_conv2d_threads(
    image: &QuantTensor,
    kernel: &QuantTensor,
    cfg: &LayerConfig,
    format: LaneFormat,
    mode: SpacerMode,
    threads: usize,
) -> Result<QuantTensor> {
    check_operands(image, kernel, cfg)?;
    let bits = format.bits();
    if !matches!(format.layout(), Layout::Spaced { .. }) || format.signedness() != Signedness::Signed {
        return Err(SamdError::FormatMismatch(format!(
            "layer convolution needs signed spaced lanes, got {format:?}"
        )));
    }
    for (what, t) in [("image", image), ("kernel", kernel)] {
        if t.bits() != bits || t.signedness() != Signedness::Signed {
            return Err(SamdError::FormatMismatch(format!(
                "{what} holds {}-bit {} values, format is {bits}-bit signed",
                t.bits(),
                t.signedness()
            )));
        }
    }
    let plan = ConvPlan::new(bits, cfg.k, format.stride(), mode)?;
    let packed = PackedLayer::new(&plan, image, kernel, cfg);
    let mut out = vec![0u8; cfg.output_dims().iter().product()];
    let map_len = cfg.out_h() * cfg.out_w();
    let threads = threads.max(1).min(cfg.kernels.max(1));
    if map_len > 0 {
        let maps_per_worker = cfg.kernels.div_ceil(threads).max(1);
        let packed = &packed;
        thread::scope(|s| {
            for (i, part) in out.chunks_mut(maps_per_worker * map_len).enumerate() {
                let first = i * maps_per_worker;
                let mut work = move || {
                    for (j, map) in part.chunks_mut(map_len).enumerate() {
                        packed.run_map(first + j, map);
                    }
                };
                if threads == 1 {
                    work();
                } else {
                    s.spawn(work);
                }
            }
        });
    }
    Ok(QuantTensor::from_raw(cfg.output_dims(), bits, Signedness::Signed, out))
}

/// Sign-extended words of the image rows and kernel rows of one layer.
struct PackedLayer<'a> {
    plan: &'a ConvPlan,
    cfg: &'a LayerConfig,
    blocks: usize,
    /// `[d][row][block]`
    image: Vec<u64>,
    /// `[m][d][y][chunk]`, each row reversed
    kernel: Vec<u64>,
}

impl<'a> PackedLayer<'a> {
    fn new(plan: &'a ConvPlan, image: &QuantTensor, kernel: &QuantTensor, cfg: &'a LayerConfig) -> Self {
        let g = plan.geometry();
        let (a, k) = (g.advance(), cfg.k);
        let blocks = g.blocks_for(cfg.img_w);
        let values = image.values();
        let mut img = Vec::with_capacity(cfg.channels * cfg.img_h * blocks);
        for row in values.chunks_exact(cfg.img_w) {
            for block in row.chunks(a) {
                img.push(plan.sign_extend(plan.pack_block(block).expect("tensor values are in range")));
            }
        }
        let taps = kernel.values();
        let mut ker = Vec::with_capacity(cfg.kernels * cfg.channels * k * g.chunks().len());
        let mut reversed = vec![0i32; k];
        for row in taps.chunks_exact(k) {
            // cross-correlation: tap t multiplies image column w + k - 1 - t
            reversed.iter_mut().zip(row.iter().rev()).for_each(|(r, &v)| *r = v);
            for w in plan.pack_kernel(&reversed).expect("tensor values are in range") {
                ker.push(plan.sign_extend(w));
            }
        }
        Self {
            plan,
            cfg,
            blocks,
            image: img,
            kernel: ker,
        }
    }

    fn run_map(&self, m: usize, out: &mut [u8]) {
        let fits = self.plan.geometry().fits_u64();
        match (self.plan.mode(), fits) {
            (SpacerMode::Temporary, true) => self.map_rows::<u64, false>(m, out),
            (SpacerMode::Temporary, false) => self.map_rows::<u128, false>(m, out),
            (SpacerMode::Permanent, true) => self.map_rows::<u64, true>(m, out),
            (SpacerMode::Permanent, false) => self.map_rows::<u128, true>(m, out),
        }
    }

    fn map_rows<W: LaneWord, const PERM: bool>(&self, m: usize, out: &mut [u8]) {
        let (plan, cfg) = (self.plan, self.cfg);
        let (k, blocks) = (cfg.k, self.blocks);
        let a = plan.geometry().advance();
        let chunks = plan.geometry().chunks().len();
        let out_w = cfg.out_w();
        let ker_m = &self.kernel[m * cfg.channels * k * chunks..][..cfg.channels * k * chunks];
        let mut acc = vec![W::default(); blocks];
        for (h, out_row) in out.chunks_exact_mut(out_w).enumerate() {
            acc.fill(W::default());
            for d in 0..cfg.channels {
                for y in 0..k {
                    let row = &self.image[(d * cfg.img_h + h + y) * blocks..][..blocks];
                    let kw = &ker_m[(d * k + y) * chunks..][..chunks];
                    for (slot, &x) in acc.iter_mut().zip(row) {
                        *slot = plan.accumulate_ext::<W, PERM>(*slot, x, kw, &mut ());
                    }
                }
            }
            let mut carry = W::default();
            for (blk, &v) in acc.iter().enumerate() {
                let v = if blk > 0 && k > 1 { plan.merge_w::<W, PERM>(v, carry) } else { v };
                let start = blk * a;
                for lane in 0..a {
                    let j = start + lane;
                    if j >= k - 1 && j < cfg.img_w {
                        out_row[j - (k - 1)] = plan.extract(v, lane) as u8;
                    }
                }
                carry = plan.carry_out(v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::conv_exact;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(h: usize, w: usize, ch: usize, m: usize, k: usize) -> LayerConfig {
        LayerConfig {
            name: "t".into(),
            img_h: h,
            img_w: w,
            channels: ch,
            kernels: m,
            k,
        }
    }

    fn random_tensor(rng: &mut ChaCha8Rng, dims: Vec<usize>, bits: u32) -> QuantTensor {
        let half = 1 << (bits - 1);
        let n: usize = dims.iter().product();
        let v: Vec<i32> = (0..n).map(|_| rng.gen_range(-half..half)).collect();
        QuantTensor::from_values(dims, bits, Signedness::Signed, &v).unwrap()
    }

    /// Sums exact 1-D row convolutions and reduces once at the end.
    fn rowwise_oracle(image: &QuantTensor, kernel: &QuantTensor, c: &LayerConfig, bits: u32) -> Vec<i32> {
        let mut out = Vec::new();
        for m in 0..c.kernels {
            for h in 0..c.out_h() {
                let mut row = vec![0i64; c.out_w()];
                for d in 0..c.channels {
                    for y in 0..c.k {
                        let img: Vec<i64> = (0..c.img_w).map(|w| image.get(&[d, h + y, w]) as i64).collect();
                        let ker: Vec<i64> = (0..c.k).rev().map(|x| kernel.get(&[m, d, y, x]) as i64).collect();
                        let full = conv_exact(&img, &ker);
                        for (w, r) in row.iter_mut().enumerate() {
                            *r += full[w + c.k - 1];
                        }
                    }
                }
                out.extend(row.iter().map(|&v| wrap_value(v, bits, Signedness::Signed) as i32));
            }
        }
        out
    }

    #[test]
    fn zero_and_identity_kernels() {
        let c = cfg(4, 4, 1, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_tensor(&mut rng, c.image_dims(), 4);
        let zero = QuantTensor::zeros(c.kernel_dims(), 4, Signedness::Signed).unwrap();
        let r = direct_conv2d_reference(&img, &zero, &c, 4).unwrap();
        assert_eq!(r.dims(), &[1, 2, 2]);
        assert!(r.values().iter().all(|&v| v == 0));

        let mut delta = vec![0; 9];
        delta[4] = 1;
        let delta = QuantTensor::from_values(c.kernel_dims(), 4, Signedness::Signed, &delta).unwrap();
        let r = direct_conv2d_reference(&img, &delta, &c, 4).unwrap();
        let crop: Vec<i32> = [(1, 1), (1, 2), (2, 1), (2, 2)].iter().map(|&(h, w)| img.get(&[0, h, w])).collect();
        assert_eq!(r.values(), crop);
        let f = LaneFormat::conv_spaced(4, Signedness::Signed).unwrap();
        for mode in [SpacerMode::Temporary, SpacerMode::Permanent] {
            assert_eq!(samd_conv2d(&img, &delta, &c, f, mode).unwrap(), r);
        }
    }

    #[test]
    fn reference_matches_rowwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let k = if rng.gen_bool(0.5) { 3 } else { 5 };
            let c = cfg(rng.gen_range(k + 1..14), rng.gen_range(k + 1..14), rng.gen_range(1..5), rng.gen_range(1..4), k);
            let bits = rng.gen_range(2..=8);
            let img = random_tensor(&mut rng, c.image_dims(), bits);
            let ker = random_tensor(&mut rng, c.kernel_dims(), bits);
            let r = direct_conv2d_reference(&img, &ker, &c, bits).unwrap();
            assert_eq!(r.values(), rowwise_oracle(&img, &ker, &c, bits));
        }
    }

    #[test]
    fn packed_matches_reference_and_modes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for bits in 2..=8 {
            for k in [3, 5] {
                let c = cfg(rng.gen_range(k + 1..17), rng.gen_range(k + 1..17), rng.gen_range(1..5), rng.gen_range(1..4), k);
                let img = random_tensor(&mut rng, c.image_dims(), bits);
                let ker = random_tensor(&mut rng, c.kernel_dims(), bits);
                let want = direct_conv2d_reference(&img, &ker, &c, bits).unwrap();
                let f = LaneFormat::conv_spaced(bits, Signedness::Signed).unwrap();
                let temp = samd_conv2d(&img, &ker, &c, f, SpacerMode::Temporary).unwrap();
                let perm = samd_conv2d(&img, &ker, &c, f, SpacerMode::Permanent).unwrap();
                assert_eq!(temp, want, "bits={bits} {c:?}");
                assert_eq!(perm, temp, "bits={bits} {c:?}");
                let par = samd_conv2d_threads(&img, &ker, &c, f, SpacerMode::Temporary, 3).unwrap();
                assert_eq!(par, temp);
            }
        }
    }

    #[test]
    fn native8_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for bits in [4, 8] {
            let c = cfg(9, 11, 3, 2, 3);
            let img = random_tensor(&mut rng, c.image_dims(), bits);
            let ker = random_tensor(&mut rng, c.kernel_dims(), bits);
            let native = native8_conv2d(&img, &ker, &c).unwrap();
            assert_eq!(native, direct_conv2d_reference(&img, &ker, &c, 8).unwrap());
            assert_eq!(native.wrap_to(bits).unwrap(), direct_conv2d_reference(&img, &ker, &c, bits).unwrap());
        }
    }

    #[test]
    fn channel_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = cfg(10, 12, 4, 2, 3);
        let bits = 3;
        let img = random_tensor(&mut rng, c.image_dims(), bits);
        let ker = random_tensor(&mut rng, c.kernel_dims(), bits);
        let perm = [2usize, 0, 3, 1];
        let (iv, kv) = (img.values(), ker.values());
        let plane = c.img_h * c.img_w;
        let img2: Vec<i32> = perm.iter().flat_map(|&d| iv[d * plane..][..plane].to_vec()).collect();
        let mut ker2 = Vec::new();
        for m in 0..c.kernels {
            for &d in &perm {
                ker2.extend_from_slice(&kv[(m * c.channels + d) * 9..][..9]);
            }
        }
        let img2 = QuantTensor::from_values(c.image_dims(), bits, Signedness::Signed, &img2).unwrap();
        let ker2 = QuantTensor::from_values(c.kernel_dims(), bits, Signedness::Signed, &ker2).unwrap();
        let f = LaneFormat::conv_spaced(bits, Signedness::Signed).unwrap();
        for mode in [SpacerMode::Temporary, SpacerMode::Permanent] {
            assert_eq!(
                samd_conv2d(&img, &ker, &c, f, mode).unwrap(),
                samd_conv2d(&img2, &ker2, &c, f, mode).unwrap()
            );
        }
    }

    #[test]
    fn rejects_bad_layers() {
        let c = cfg(8, 8, 1, 1, 4);
        assert!(c.validate().is_err());
        assert!(cfg(3, 8, 1, 1, 3).validate().is_err());
        let c = cfg(8, 8, 2, 1, 3);
        let img = QuantTensor::zeros(vec![1, 8, 8], 3, Signedness::Signed).unwrap();
        let ker = QuantTensor::zeros(c.kernel_dims(), 3, Signedness::Signed).unwrap();
        assert!(matches!(direct_conv2d_reference(&img, &ker, &c, 3), Err(SamdError::Shape(_))));
        let img = QuantTensor::zeros(c.image_dims(), 3, Signedness::Signed).unwrap();
        let narrow = LaneFormat::spaced(3, Signedness::Signed, 6).unwrap();
        assert!(matches!(
            samd_conv2d(&img, &ker, &c, narrow, SpacerMode::Temporary),
            Err(SamdError::ConvHeadroom { .. })
        ));
        let f4 = LaneFormat::conv_spaced(4, Signedness::Signed).unwrap();
        assert!(samd_conv2d(&img, &ker, &c, f4, SpacerMode::Temporary).is_err());
    }

    #[test]
    fn zero_output_maps() {
        let c = cfg(8, 8, 3, 0, 3);
        let img = QuantTensor::zeros(c.image_dims(), 3, Signedness::Signed).unwrap();
        let ker = QuantTensor::zeros(c.kernel_dims(), 3, Signedness::Signed).unwrap();
        let f = LaneFormat::conv_spaced(3, Signedness::Signed).unwrap();
        let out = samd_conv2d(&img, &ker, &c, f, SpacerMode::Permanent).unwrap();
        assert!(out.is_empty());
        assert_eq!(out, direct_conv2d_reference(&img, &ker, &c, 3).unwrap());
    }
}
