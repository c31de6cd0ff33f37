use embedded_rmt::wick::{exact_normalized_moment, OracleConfig};
use num_traits::ToPrimitive;

fn main() {
    let config = OracleConfig::default();
    for l in [8u16, 16, 24, 32] {
        let t = std::time::Instant::now();
        let v = exact_normalized_moment(l, 4, 1, 4, &config).unwrap();
        println!("l={l}: beta4 = {} ~ {:.6}  ({:?})", v, v.to_f64().unwrap(), t.elapsed());
    }
}
