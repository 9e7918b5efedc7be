mod common;

use common::gas_oracle;

#[test]
fn table_covers_every_family() {
    assert!(gas_oracle::snippets().len() >= 40);
}

#[test]
fn snippets_match_hand_priced_totals() {
    let mut failures = Vec::new();
    for s in gas_oracle::snippets() {
        let got = gas_oracle::run(&s);
        if got != (s.status, s.gas_used) {
            failures.push(format!(
                "{}: expected {:?}/{} got {:?}/{}",
                s.name, s.status, s.gas_used, got.0, got.1
            ));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn assembler_round_trips_push_immediates() {
    assert_eq!(gas_oracle::asm("PUSH2 1 STOP"), vec![0x61, 0x00, 0x01, 0x00]);
    assert_eq!(gas_oracle::asm("PUSH1 ff 0x0c"), vec![0x60, 0xff, 0x0c]);
}
