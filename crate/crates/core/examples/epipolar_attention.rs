//! Masked attention on a toy 4-frame 8x16 problem, both mask semantics.
//!
//!     cargo run --release --example epipolar_attention

use panoepi::attention::{attend, attn_grad_check, MaskSemantics};
use panoepi::geometry::GridSpec;
use panoepi::validate::attention_toy;

fn main() -> panoepi::Result<()> {
    let (t, mask) = attention_toy(4, GridSpec::new(16, 8)?, 8, 5)?;
    println!(
        "q {:?}  k {:?}  mask {:?}, open fraction {:.3}",
        t.q.shape(),
        t.k.shape(),
        mask.shape(),
        mask.mean()
    );

    for mode in [MaskSemantics::MultiplicativeLiteral, MaskSemantics::AdditiveNegInf] {
        let out = attend(&t, &mask, mode)?;
        let masked_weight: f64 = out
            .weights
            .iter()
            .zip(mask.iter())
            .filter(|(_, &m)| m == 0.0)
            .map(|(w, _)| w)
            .sum();
        let g = attn_grad_check(&t, &mask, mode, 1e-6)?;
        println!(
            "{mode:?}: weight on masked keys {masked_weight:.3e}, output[0] {:.4?}, gradcheck {:.1e}",
            out.output.row(0).iter().take(3).collect::<Vec<_>>(),
            g.max()
        );
    }
    Ok(())
}
