// scratch: engine vs closed forms over a grid
use embedded_rmt::diagram::assemble_moment;
use embedded_rmt::formulas::nth_moment_limit;

fn main() {
    let mut bad = 0;
    for n in [2u32, 3, 4] {
        for m in 11..=14u16 {
            for k in 0..=m {
                let got = assemble_moment(n, m, k).unwrap();
                let want = nth_moment_limit(n, m as u64, k as u64).unwrap();
                if got != want {
                    println!("MISMATCH n={n} m={m} k={k}: engine={got} formula={want}");
                    bad += 1;
                }
            }
        }
        println!("n={n} done");
    }
    if bad == 0 {
        println!("ALL MATCH");
    } else {
        println!("{bad} mismatches");
    }
}
