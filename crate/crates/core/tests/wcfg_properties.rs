mod common;

use common::wcfg_oracle;
use gasfuzz_core::abi::random_gene;
use gasfuzz_core::evm::VecTracer;
use gasfuzz_core::{HarnessConfig, Wcfg};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus_runtime(name: &str) -> Vec<u8> {
    let text = std::fs::read_to_string(common::corpus_dir().join(format!("{name}.bin-runtime"))).unwrap();
    gasfuzz_core::parse_hex_code(&text).unwrap()
}

#[test]
fn corpus_graphs_are_well_formed() {
    for name in ["Token", "Registry", "DistributeFixed"] {
        let code = corpus_runtime(name);
        let cfg = Wcfg::from_code(&code);
        wcfg_oracle::check(&code, &cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(cfg.blocks().len() > 10, "{name}");
    }
}

#[test]
fn oracle_rejects_a_merged_graph() {
    let code = [0x60, 0x01, 0x5b, 0x00];
    wcfg_oracle::check(&code, &Wcfg::from_code(&code)).unwrap();
    // same length, but PC instead of JUMPDEST gives a single block
    let merged = Wcfg::from_code(&[0x60, 0x01, 0x58, 0x00]);
    assert!(wcfg_oracle::check(&code, &merged).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn random_bytes_partition(code in prop::collection::vec(any::<u8>(), 0..256)) {
        let cfg = Wcfg::from_code(&code);
        prop_assert!(wcfg_oracle::check(&code, &cfg).is_ok(), "{:?}", wcfg_oracle::check(&code, &cfg));
    }

    #[test]
    fn jumpdest_heavy_bytes_partition(
        code in prop::collection::vec(prop::sample::select(vec![0x5bu8, 0x56, 0x57, 0x60, 0x7f, 0x00, 0x01, 0xfe]), 0..128)
    ) {
        let cfg = Wcfg::from_code(&code);
        prop_assert!(wcfg_oracle::check(&code, &cfg).is_ok(), "{:?}", wcfg_oracle::check(&code, &cfg));
    }
}

/// Splits a trace into complete passes through a block: runs that enter at
/// the block start and execute every instruction of it.
fn complete_passes(cfg: &Wcfg, steps: &[gasfuzz_core::evm::RecordedStep]) -> Vec<(u32, u64)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < steps.len() {
        let Some(block) = steps[i].block else {
            i += 1;
            continue;
        };
        let b = cfg.block(block);
        let want = b.instructions.len();
        let mut j = i;
        let mut charged = 0;
        while j < steps.len() && steps[j].block == Some(block) && j - i < want {
            charged += steps[j].gas_cost;
            j += 1;
        }
        if steps[i].pc == b.start_offset && j - i == want {
            out.push((block, charged));
        }
        i = j.max(i + 1);
    }
    out
}

#[test]
fn block_weight_bounds_charged_gas_from_below() {
    let mut checked = 0;
    for (name, function) in [
        ("Token", "transfer"),
        ("Token", "transferFrom"),
        ("Token", "approve"),
        ("Registry", "addSERAPHIM"),
        ("DistributeFixed", "distributeFixed"),
    ] {
        let (_, instance, runner) = common::deploy(name, function);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let (gene, map) = random_gene(std::slice::from_ref(&runner.spec), &mut rng);
            let mut world = instance.world.clone();
            let mut tracer = VecTracer::default();
            runner
                .run_traced(&instance, &mut world, &gene, &map, &HarnessConfig::default(), &mut tracer)
                .unwrap();
            for (block, charged) in complete_passes(&runner.wcfg, &tracer.steps) {
                let weight = runner.wcfg.block(block).weight;
                assert!(charged >= weight, "{name}: block {block} charged {charged} < weight {weight}");
                checked += 1;
            }
        }
    }
    assert!(checked > 1000, "only {checked} passes checked");
}
