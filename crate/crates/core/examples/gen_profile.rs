//! Regenerates `data/profile_ref.csv`:
//!
//!     cargo run -p dolphin-tail --example gen_profile > crates/core/data/profile_ref.csv

use dolphin_tail::profile::synthetic;

fn main() {
    print!("{}", synthetic::reference_csv(synthetic::REFERENCE_ROWS));
}
