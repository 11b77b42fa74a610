//! Kernels compiled to cost-and-effect instruction programs.
//!
//! A processing element runs `per_activation` once per work item it is
//! assigned. Time is charged only through [`CostInstr::Busy`]; memory effects
//! are instantaneous. The minimum kernel additionally has an `epilogue` that
//! local id 0 runs once per workgroup to reduce local memory into `glob[0]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_launch, KernelKind, PlatformConfig, ProblemSpec, TuningParams};

/// Initial content of every local-memory slot for the minimum kernel.
pub const MAX_SENTINEL: i64 = i64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MemTag {
    Global,
    Local,
}

/// Memory operation executed by a processing element. Offsets are relative:
/// `LoadMin` reads `glob[offset + glob_id * ts]`, `ReduceLocal` reads
/// `loc[myloc + offset]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EffectOp {
    LoadMin { offset: u32 },
    ReduceLocal { offset: u32 },
    WriteGlobal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostInstr {
    Busy { ticks: u32, tag: MemTag },
    LocalBarrier,
    Effect(EffectOp),
    ActivationEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelProgram {
    pub per_activation: Vec<CostInstr>,
    /// Empty when the kernel has no per-workgroup reduction.
    pub epilogue: Vec<CostInstr>,
}

fn busy_total(instrs: &[CostInstr]) -> u64 {
    instrs
        .iter()
        .map(|i| match i {
            CostInstr::Busy { ticks, .. } => u64::from(*ticks),
            _ => 0,
        })
        .sum()
}

impl KernelProgram {
    pub fn build(
        platform: &PlatformConfig,
        problem: &ProblemSpec,
        params: TuningParams,
    ) -> Result<Self> {
        match problem.kernel {
            KernelKind::Abstract => build_abstract_kernel(problem.size, params, platform),
            KernelKind::Minimum => {
                let input = problem.input.as_deref().ok_or_else(|| {
                    Error::InvalidProblem("the minimum kernel requires an input array".into())
                })?;
                build_minimum_kernel(problem.size, params, platform, input)
            }
        }
    }

    pub fn activation_busy_ticks(&self) -> u64 {
        busy_total(&self.per_activation)
    }

    pub fn epilogue_busy_ticks(&self) -> u64 {
        busy_total(&self.epilogue)
    }

    pub fn barrier_count(&self) -> usize {
        self.per_activation
            .iter()
            .filter(|i| matches!(i, CostInstr::LocalBarrier))
            .count()
    }

    pub fn has_epilogue(&self) -> bool {
        !self.epilogue.is_empty()
    }

    /// Structural checks the machine relies on: every sequence ends with
    /// exactly one `ActivationEnd`, and busy segments are non-empty.
    pub fn validate(&self) -> Result<()> {
        for (name, seq, may_be_empty) in [
            ("per_activation", &self.per_activation, false),
            ("epilogue", &self.epilogue, true),
        ] {
            if seq.is_empty() {
                if may_be_empty {
                    continue;
                }
                return Err(Error::Contract(format!("{name} is empty")));
            }
            let ends = seq
                .iter()
                .filter(|i| matches!(i, CostInstr::ActivationEnd))
                .count();
            if ends != 1 || seq.last() != Some(&CostInstr::ActivationEnd) {
                return Err(Error::Contract(format!(
                    "{name} must end with a single ActivationEnd"
                )));
            }
            if seq
                .iter()
                .any(|i| matches!(i, CostInstr::Busy { ticks: 0, .. }))
            {
                return Err(Error::Contract(format!(
                    "{name} has a zero-tick busy segment"
                )));
            }
        }
        if self
            .epilogue
            .iter()
            .any(|i| matches!(i, CostInstr::LocalBarrier))
        {
            return Err(Error::Contract(
                "the epilogue runs on one element and cannot hold a barrier".into(),
            ));
        }
        Ok(())
    }
}

/// Tiled kernel: for every tile, a global-memory load, a barrier, local work
/// and a second barrier; then one global write of the result. Both local-work
/// branches of the source kernel cost the same, so no branch is emitted.
pub fn build_abstract_kernel(
    size: u32,
    params: TuningParams,
    platform: &PlatformConfig,
) -> Result<KernelProgram> {
    derive_launch(platform, size, params)?;
    let tiles = size / params.ts;
    let mut per_activation = Vec::with_capacity(tiles as usize * 4 + 2);
    for _ in 0..tiles {
        per_activation.push(CostInstr::Busy {
            ticks: platform.gmt * params.ts,
            tag: MemTag::Global,
        });
        per_activation.push(CostInstr::LocalBarrier);
        per_activation.push(CostInstr::Busy {
            ticks: params.ts,
            tag: MemTag::Local,
        });
        per_activation.push(CostInstr::LocalBarrier);
    }
    per_activation.push(CostInstr::Busy {
        ticks: platform.gmt,
        tag: MemTag::Global,
    });
    per_activation.push(CostInstr::ActivationEnd);
    Ok(KernelProgram {
        per_activation,
        epilogue: Vec::new(),
    })
}

/// Minimum reduction: each work item folds `ts` global elements into its
/// local slot, then local id 0 folds the group's slots and min-combines the
/// result into `glob[0]`.
pub fn build_minimum_kernel(
    size: u32,
    params: TuningParams,
    platform: &PlatformConfig,
    input: &[i64],
) -> Result<KernelProgram> {
    let plan = derive_launch(platform, size, params)?;
    if input.len() != size as usize {
        return Err(Error::InvalidProblem(format!(
            "input has {} elements, size is {size}",
            input.len()
        )));
    }
    // highest element touched is (wgs*wg - 1)*ts + ts - 1
    let touched = u64::from(plan.wgs) * u64::from(params.wg) * u64::from(params.ts);
    if touched > u64::from(size) {
        return Err(Error::Infeasible {
            params,
            size,
            reason: format!(
                "{} work items of {} elements read past global memory",
                plan.wgs * params.wg,
                params.ts
            ),
        });
    }

    let mut per_activation = Vec::with_capacity(params.ts as usize * 2 + 1);
    for offset in 0..params.ts {
        per_activation.push(CostInstr::Effect(EffectOp::LoadMin { offset }));
        per_activation.push(CostInstr::Busy {
            ticks: platform.gmt,
            tag: MemTag::Global,
        });
    }
    per_activation.push(CostInstr::ActivationEnd);

    let mut epilogue = Vec::with_capacity(plan.nwe as usize * 2 + 2);
    for offset in 1..plan.nwe {
        epilogue.push(CostInstr::Effect(EffectOp::ReduceLocal { offset }));
        epilogue.push(CostInstr::Busy {
            ticks: 1,
            tag: MemTag::Local,
        });
    }
    epilogue.push(CostInstr::Effect(EffectOp::WriteGlobal));
    epilogue.push(CostInstr::Busy {
        ticks: platform.gmt,
        tag: MemTag::Global,
    });
    epilogue.push(CostInstr::ActivationEnd);

    Ok(KernelProgram {
        per_activation,
        epilogue,
    })
}

/// Global work-item index of local id `me` in workgroup `nwg` during round
/// `iter`. Rounds only exist when the group is wider than the unit.
pub fn global_item_id(params: TuningParams, np: u32, nwg: u32, me: u32, iter: u32) -> u32 {
    if params.wg > np {
        nwg * params.wg + me + iter * np
    } else {
        nwg * params.wg + me
    }
}

/// Global and local memory of the minimum kernel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MemoryModel {
    pub glob: Vec<i64>,
    /// `np` slots per unit; element `me` of unit `mu` owns `me + mu * np`.
    pub loc: Vec<i64>,
}

impl MemoryModel {
    pub fn new(input: &[i64], units: u32, np: u32) -> Self {
        MemoryModel {
            glob: input.to_vec(),
            loc: vec![MAX_SENTINEL; (units * np) as usize],
        }
    }

    pub fn result(&self) -> i64 {
        self.glob[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn platform(gmt: u32) -> PlatformConfig {
        PlatformConfig::new(1, 1, 4, gmt).unwrap()
    }

    // independent cost formula: tiles * (gmt*ts + ts) + gmt
    fn abstract_ticks(size: u32, ts: u32, gmt: u32) -> u64 {
        u64::from(size / ts) * u64::from(gmt * ts + ts) + u64::from(gmt)
    }

    #[test]
    fn abstract_costs() {
        let k = build_abstract_kernel(8, TuningParams::new(4, 4), &platform(4)).unwrap();
        assert_eq!(k.activation_busy_ticks(), 44);
        assert_eq!(k.barrier_count(), 4);
        assert!(k.epilogue.is_empty());
        k.validate().unwrap();

        let k = build_abstract_kernel(4, TuningParams::new(2, 2), &platform(1)).unwrap();
        assert_eq!(k.activation_busy_ticks(), 9);

        let k = build_abstract_kernel(16, TuningParams::new(8, 4), &platform(4)).unwrap();
        assert_eq!(k.activation_busy_ticks(), 84);
    }

    #[test]
    fn abstract_cost_closure() {
        for size in [4u32, 8, 16, 32, 64] {
            for gmt in 1..=6 {
                for params in crate::model::enumerate_configs(size).unwrap() {
                    let k = build_abstract_kernel(size, params, &platform(gmt)).unwrap();
                    assert_eq!(
                        k.activation_busy_ticks(),
                        abstract_ticks(size, params.ts, gmt)
                    );
                    assert_eq!(k.barrier_count() as u32, 2 * size / params.ts);
                    k.validate().unwrap();
                }
            }
        }
    }

    #[test]
    fn minimum_program_shape() {
        let input: Vec<i64> = (0..16).map(|i| 16 - i).collect();
        let k = build_minimum_kernel(16, TuningParams::new(8, 2), &platform(4), &input).unwrap();
        k.validate().unwrap();
        assert_eq!(k.activation_busy_ticks(), 8);
        // nwe = 4: three local folds and one global write
        assert_eq!(k.epilogue_busy_ticks(), 3 + 4);
        assert_eq!(k.barrier_count(), 0);
    }

    #[test]
    fn minimum_rejects_out_of_range_configs() {
        let input = vec![0; 16];
        let err = build_minimum_kernel(16, TuningParams::new(8, 4), &platform(4), &input);
        assert!(matches!(err, Err(Error::Infeasible { .. })));
        let err = build_minimum_kernel(16, TuningParams::new(2, 2), &platform(4), &input[..8]);
        assert!(matches!(err, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn item_indexing() {
        let p = TuningParams::new(8, 2);
        let id = global_item_id(p, 4, 0, 1, 1);
        assert_eq!(id, 5);
        assert_eq!(id * p.ts, 10);
        assert_eq!(global_item_id(TuningParams::new(4, 2), 4, 1, 3, 0), 7);
    }

    #[test]
    fn memory_initialization() {
        let m = MemoryModel::new(&[3, 1, 2, 0], 2, 4);
        assert_eq!(m.loc, vec![MAX_SENTINEL; 8]);
        assert_eq!(m.result(), 3);
    }
}
