//! Boundary symbol integrals q1, q2, q3 by quadrature and in closed form.

use steklov::kernels::{symbol_q, symbol_q_numeric, SymbolQuadrature};

fn main() -> steklov::Result<()> {
    let opts = SymbolQuadrature::default();
    println!(" j   x_n    xi'      numeric            closed         tail");
    for j in 1..=3u8 {
        for (x, xi) in [(0.0, 1.0), (0.25, 0.5), (1.0, 3.0), (2.5, 1.0)] {
            let q = symbol_q_numeric(j, x, xi, opts)?;
            println!("{j:>2} {x:>5} {xi:>6} {:>17.12} {:>15.12} {:>10.1e}", q.re, symbol_q(j, x, xi)?, q.tail);
        }
    }
    Ok(())
}
