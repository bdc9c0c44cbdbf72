//! Check sounder parameters against the delay profile of a channel.
//!
//! cargo run --example delay_budget

use uwb_sounder::prelude::*;

fn main() -> uwb_sounder::Result<()> {
    let cfg = SounderConfig::table_i();
    let cases = [
        ("office, 2.0 us spread", 0, 1000),
        ("hall, 2.05 us spread", 0, 1025),
        ("late first arrival", 1024, 1100),
        ("too late first arrival", 1030, 1100),
    ];
    for (name, first, last) in cases {
        let model = ChannelModel::new(
            vec![
                Tap::new(first, Complex64::new(1.0, 0.0)),
                Tap::new(last, Complex64::new(0.1, 0.0)),
            ],
            0.0,
            vec![],
            0,
        )?;
        let report = validate_config(&cfg, &model);
        println!("{name}: {}", if report.passed() { "pass" } else { "FAIL" });
        println!("{report}");
    }
    Ok(())
}
