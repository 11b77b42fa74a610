//! Promela source for the model, for cross-checking with SPIN.
//!
//! The emitted model follows the engine's semantics rather than reproducing
//! any one historical listing: workgroups come from a shared pool handed out
//! by the devices, a busy segment of `gt * tz` ticks really takes that many
//! ticks, and the host sets `FIN` only after every worker process has exited.

use crate::error::Result;
use crate::model::{log2_size, KernelKind, PlatformConfig, ProblemSpec};

/// Bound written into the `ltl` block when the caller gives none.
pub const PLACEHOLDER_T: u64 = 100;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExportOptions {
    /// Keep the platform's device and unit counts instead of collapsing the
    /// model to one device with one unit.
    pub full_hierarchy: bool,
    pub bound: Option<u64>,
}

struct Out(String);

impl Out {
    fn line(&mut self, indent: usize, text: &str) {
        for _ in 0..indent {
            self.0.push_str("  ");
        }
        self.0.push_str(text);
        self.0.push('\n');
    }

    fn blank(&mut self) {
        self.0.push('\n');
    }
}

pub fn export_promela(
    platform: &PlatformConfig,
    problem: &ProblemSpec,
    options: ExportOptions,
) -> Result<String> {
    platform.validate()?;
    problem.validate()?;
    let n = log2_size(problem.size)?;
    let (nd, nu) = if options.full_hierarchy {
        (platform.nd, platform.nu)
    } else {
        (1, 1)
    };
    let minimum = problem.kernel == KernelKind::Minimum;
    let t = options.bound.unwrap_or(PLACEHOLDER_T);

    let mut o = Out(String::new());
    o.line(
        0,
        &format!(
            "/* {} kernel, size {}, generated by mctune */",
            problem.kernel, problem.size
        ),
    );
    o.blank();
    for (name, value) in [
        ("ND", u64::from(nd)),
        ("NU", u64::from(nu)),
        ("NP", u64::from(platform.np)),
        ("GMT", u64::from(platform.gmt)),
        ("LOG2_SIZE", u64::from(n)),
        ("T", t),
    ] {
        o.line(0, &format!("#define {name} {value}"));
    }
    if minimum {
        o.line(0, "#define MAX 2147483647");
        o.line(0, "#define min(a, b) ((a) < (b) -> (a) : (b))");
    }
    o.blank();
    o.line(0, "mtype = { go, reduce, stop, done };");
    o.blank();
    o.line(0, &format!("int size = {};", problem.size));
    o.line(0, "int WG, TS, WGs, NWD, NWU, NWE, allNWE;");
    o.line(0, "int NRP_work = 0;");
    o.line(0, "int time = 0;");
    o.line(0, "bool FIN = false;");
    o.line(0, "int next_group = 0;");
    o.line(0, "/* processes below the host still running */");
    o.line(0, "int alive = 0;");
    o.line(0, "/* each unit's share of allNWE */");
    o.line(0, "int reserved[ND * NU];");
    if minimum {
        o.line(0, &format!("int glob[{}];", problem.size));
        o.line(0, "int loc[ND * NU * NP];");
    }
    o.blank();
    o.line(0, "chan hst_d[ND] = [0] of { mtype };");
    o.line(0, "chan d_hst = [0] of { mtype, byte };");
    o.line(0, "chan dev_u[ND * NU] = [0] of { mtype, int };");
    o.line(0, "chan u_dev[ND] = [0] of { mtype, byte };");
    o.line(0, "chan u_pex[ND * NU * NP] = [0] of { mtype, int, int };");
    o.line(0, "chan pex_u[ND * NU] = [0] of { mtype, byte, int };");
    o.line(0, "chan pex_b[ND * NU] = [0] of { mtype };");
    o.line(0, "chan b_pex[ND * NU * NP] = [0] of { mtype };");
    o.blank();

    o.line(0, "inline long_work(gt, tz) {");
    o.line(1, "start_time = time;");
    o.line(1, "do");
    o.line(1, ":: time >= (start_time + (gt * tz)) -> break");
    o.line(1, ":: else -> atomic {");
    o.line(4, "cur_time = time;");
    o.line(4, "NRP_work++;");
    o.line(4, "time == cur_time + 1 }");
    o.line(1, "od");
    o.line(0, "}");
    o.blank();

    emit_pex(&mut o, minimum);
    emit_barrier(&mut o);
    emit_unit(&mut o, minimum);
    emit_device(&mut o);
    emit_host(&mut o);
    emit_clock(&mut o);
    emit_main(&mut o, problem, minimum);

    o.line(0, "ltl over_time { [] (FIN -> (time > T)) }");
    Ok(o.0)
}

fn emit_pex(o: &mut Out, minimum: bool) {
    o.line(0, "proctype pex(byte me; byte u) {");
    o.line(1, "int start_time, cur_time, nwg, iter, k;");
    if minimum {
        o.line(1, "int glob_id;");
        o.line(1, "int myloc = me + u * NP;");
    }
    o.line(1, "do");
    o.line(1, ":: u_pex[u * NP + me] ? go(nwg, iter) ->");
    if minimum {
        o.line(
            3,
            "glob_id = (WG > NP -> nwg * WG + me + iter * NP : nwg * WG + me);",
        );
        o.line(3, "for (k : 0 .. TS - 1) {");
        o.line(4, "loc[myloc] = min(loc[myloc], glob[k + glob_id * TS]);");
        o.line(4, "long_work(GMT, 1)");
        o.line(3, "}");
    } else {
        o.line(3, "for (k : 0 .. size / TS - 1) {");
        o.line(4, "long_work(GMT, TS); // global memory");
        o.line(4, "pex_b[u] ! done; b_pex[u * NP + me] ? go;");
        o.line(4, "long_work(1, TS); // local memory");
        o.line(4, "pex_b[u] ! done; b_pex[u * NP + me] ? go");
        o.line(3, "}");
        o.line(3, "long_work(GMT, 1); // result to global memory");
    }
    o.line(3, "pex_u[u] ! done(me, iter)");
    if minimum {
        o.line(1, ":: u_pex[u * NP + me] ? reduce(nwg, iter) ->");
        o.line(3, "for (k : 1 .. NWE - 1) {");
        o.line(4, "loc[myloc] = min(loc[myloc], loc[myloc + k]);");
        o.line(4, "long_work(1, 1)");
        o.line(3, "}");
        o.line(3, "glob[0] = min(glob[0], loc[myloc]);");
        o.line(3, "long_work(GMT, 1);");
        o.line(3, "pex_u[u] ! done(me, iter)");
    }
    o.line(1, ":: u_pex[u * NP + me] ? stop(nwg, iter) -> break");
    o.line(1, "od;");
    o.line(1, "alive--");
    o.line(0, "}");
    o.blank();
}

fn emit_barrier(o: &mut Out) {
    o.line(0, "proctype barrier(byte u) {");
    o.line(1, "byte i, count;");
    o.line(1, "do");
    o.line(1, ":: pex_b[u] ? done ->");
    o.line(3, "count = 1;");
    o.line(3, "do");
    o.line(3, ":: count < NWE -> pex_b[u] ? done; count++");
    o.line(3, ":: else -> break");
    o.line(3, "od;");
    o.line(
        3,
        "atomic { for (i : 0 .. NWE - 1) { b_pex[u * NP + i] ! go } }",
    );
    o.line(1, ":: pex_b[u] ? stop -> break");
    o.line(1, "od;");
    o.line(1, "alive--");
    o.line(0, "}");
    o.blank();
}

fn emit_unit(o: &mut Out, minimum: bool) {
    o.line(0, "proctype unit(byte u; byte dev) {");
    o.line(1, "byte i, finished;");
    o.line(1, "int nwg, me_, iter_;");
    o.line(1, "atomic {");
    o.line(2, "alive++; run barrier(u);");
    o.line(2, "for (i : 0 .. NWE - 1) { alive++; run pex(i, u) } }");
    o.line(1, "do");
    o.line(1, ":: dev_u[u] ? go(nwg) ->");
    o.line(
        3,
        "atomic { for (i : 0 .. NWE - 1) { u_pex[u * NP + i] ! go(nwg, 0) } }",
    );
    o.line(3, "finished = 0;");
    o.line(3, "do");
    o.line(3, ":: finished < NWE ->");
    o.line(5, "atomic {");
    o.line(6, "pex_u[u] ? done(me_, iter_);");
    o.line(6, "if");
    o.line(
        6,
        ":: iter_ + 1 < WG / NWE -> u_pex[u * NP + me_] ! go(nwg, iter_ + 1)",
    );
    o.line(6, ":: else -> finished++");
    o.line(6, "fi }");
    o.line(3, ":: else -> break");
    o.line(3, "od;");
    if minimum {
        o.line(3, "/* local id 0 reduces the group alone */");
        o.line(
            3,
            "atomic { allNWE = allNWE - (reserved[u] - 1); reserved[u] = 1 }",
        );
        o.line(3, "u_pex[u * NP] ! reduce(nwg, 0);");
        o.line(3, "pex_u[u] ? done(me_, iter_);");
        o.line(
            3,
            "atomic { allNWE = allNWE + (NWE - reserved[u]); reserved[u] = NWE };",
        );
    }
    o.line(3, "u_dev[dev] ! done(u)");
    o.line(1, ":: dev_u[u] ? stop(nwg) ->");
    o.line(3, "pex_b[u] ! stop;");
    o.line(
        3,
        "atomic { for (i : 0 .. NWE - 1) { u_pex[u * NP + i] ! stop(0, 0) } }",
    );
    o.line(3, "break");
    o.line(1, "od;");
    o.line(1, "alive--");
    o.line(0, "}");
    o.blank();
}

fn emit_device(o: &mut Out) {
    o.line(0, "proctype device(byte id) {");
    o.line(1, "byte i, u, pending;");
    o.line(
        1,
        "atomic { for (i : 0 .. NWU - 1) { alive++; run unit(id * NU + i, id) } }",
    );
    o.line(1, "do");
    o.line(1, ":: hst_d[id] ? go ->");
    o.line(3, "atomic {");
    o.line(4, "pending = 0;");
    o.line(4, "for (i : 0 .. NWU - 1) {");
    o.line(5, "if");
    o.line(5, ":: next_group < WGs ->");
    o.line(7, "if");
    o.line(7, ":: reserved[id * NU + i] == 0 ->");
    o.line(9, "reserved[id * NU + i] = NWE; allNWE = allNWE + NWE");
    o.line(7, ":: else -> skip");
    o.line(7, "fi;");
    o.line(7, "dev_u[id * NU + i] ! go(next_group);");
    o.line(7, "next_group++; pending++");
    o.line(5, ":: else -> /* no group left for this unit */");
    o.line(7, "allNWE = allNWE - reserved[id * NU + i];");
    o.line(7, "reserved[id * NU + i] = 0");
    o.line(5, "fi } }");
    o.line(3, "do");
    o.line(3, ":: pending > 0 -> u_dev[id] ? done(u); pending--");
    o.line(3, ":: else -> break");
    o.line(3, "od;");
    o.line(3, "d_hst ! done(id)");
    o.line(1, ":: hst_d[id] ? stop ->");
    o.line(3, "atomic {");
    o.line(4, "for (i : 0 .. NWU - 1) {");
    o.line(5, "allNWE = allNWE - reserved[id * NU + i];");
    o.line(5, "reserved[id * NU + i] = 0;");
    o.line(5, "dev_u[id * NU + i] ! stop(0) } }");
    o.line(3, "break");
    o.line(1, "od;");
    o.line(1, "alive--");
    o.line(0, "}");
    o.blank();
}

fn emit_host(o: &mut Out) {
    o.line(0, "proctype host() {");
    o.line(1, "byte i, d, stopped;");
    o.line(
        1,
        "atomic { for (i : 0 .. NWD - 1) { alive++; run device(i) } }",
    );
    o.line(1, "atomic { for (i : 0 .. NWD - 1) { hst_d[i] ! go } }");
    o.line(1, "do");
    o.line(1, ":: stopped < NWD ->");
    o.line(3, "atomic {");
    o.line(4, "d_hst ? done(d);");
    o.line(4, "if");
    o.line(4, ":: next_group < WGs -> hst_d[d] ! go");
    o.line(4, ":: else -> hst_d[d] ! stop; stopped++");
    o.line(4, "fi }");
    o.line(1, ":: else -> break");
    o.line(1, "od;");
    o.line(
        1,
        "alive == 0; // every device, unit, barrier and pex has exited",
    );
    o.line(1, "FIN = true");
    o.line(0, "}");
    o.blank();
}

fn emit_clock(o: &mut Out) {
    o.line(0, "proctype clock() {");
    o.line(1, "do");
    o.line(1, ":: FIN -> break");
    o.line(1, ":: !FIN && allNWE != 0 && NRP_work == allNWE ->");
    o.line(3, "atomic { NRP_work = 0; time++ }");
    o.line(1, "od");
    o.line(0, "}");
    o.blank();
}

fn emit_main(o: &mut Out, problem: &ProblemSpec, minimum: bool) {
    o.line(0, "active proctype main() {");
    o.line(1, "int i;");
    if minimum {
        let input = problem.input.as_deref().unwrap_or(&[]);
        let default: Vec<i64> = (0..i64::from(problem.size))
            .map(|i| i64::from(problem.size) - i)
            .collect();
        if input == default.as_slice() {
            o.line(1, "for (i : 0 .. size - 1) { glob[i] = size - i }");
        } else {
            for (i, v) in input.iter().enumerate() {
                o.line(1, &format!("glob[{i}] = {v};"));
            }
        }
        o.line(1, "for (i : 0 .. ND * NU * NP - 1) { loc[i] = MAX }");
    }
    o.line(1, "// workgroup size selection");
    o.line(1, "select (i : 1 .. LOG2_SIZE - 1);");
    o.line(1, "WG = size >> (LOG2_SIZE - i);");
    o.line(1, "// tile size selection");
    o.line(1, "select (i : 1 .. LOG2_SIZE - 1);");
    o.line(1, "TS = size >> (LOG2_SIZE - i);");
    o.line(1, "// number of working groups, at least one");
    o.line(1, "WGs = size / (WG * TS);");
    o.line(1, "WGs = (WGs == 0 -> 1 : WGs);");
    if minimum {
        o.line(1, "// configurations that read past glob never start");
        o.line(1, "WGs * WG * TS <= size;");
    }
    o.line(1, "NWD = (WGs <= NU * ND -> (WGs / NU) : ND);");
    o.line(1, "NWD = (WGs / NU -> NWD : 1);");
    o.line(1, "NWU = (WGs <= NU -> WGs : NU);");
    o.line(1, "NWE = (WG <= NP -> WG : NP);");
    o.line(1, "allNWE = NWE * NWU * NWD;");
    o.line(
        1,
        "for (i : 0 .. ND * NU - 1) { reserved[i] = (i % NU < NWU && i / NU < NWD -> NWE : 0) }",
    );
    o.line(1, "atomic {");
    o.line(2, "run host();");
    o.line(2, "run clock() }");
    o.line(0, "}");
    o.blank();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(text: &str) -> bool {
        let mut depth = 0i64;
        for c in text.chars() {
            match c {
                '{' | '(' | '[' => depth += 1,
                '}' | ')' | ']' => depth -= 1,
                _ => {}
            }
            if depth < 0 {
                return false;
            }
        }
        depth == 0
    }

    #[test]
    fn abstract_export_fragments() {
        let platform = PlatformConfig::default();
        let problem = ProblemSpec::abstract_kernel(8).unwrap();
        let a = export_promela(&platform, &problem, ExportOptions::default()).unwrap();
        let b = export_promela(&platform, &problem, ExportOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("NRP_work == allNWE"));
        assert!(a.contains("WGs = size / (WG * TS)"));
        assert!(a.contains("ltl over_time { [] (FIN -> (time > T)) }"));
        assert!(a.contains("int size = 8;"));
        assert!(a.contains("#define T 100"));
        assert!(a.contains("#define ND 1\n#define NU 1\n#define NP 4\n#define GMT 4\n"));
        assert!(!a.contains("glob["));
        assert!(balanced(&a));
    }

    #[test]
    fn full_hierarchy_keeps_platform_counts() {
        let platform = PlatformConfig::new(2, 3, 4, 5).unwrap();
        let problem = ProblemSpec::abstract_kernel(16).unwrap();
        let opts = ExportOptions {
            full_hierarchy: true,
            bound: Some(84),
        };
        let text = export_promela(&platform, &problem, opts).unwrap();
        assert!(text.contains("#define ND 2\n#define NU 3\n"));
        assert!(text.contains("#define T 84"));
        let single = export_promela(&platform, &problem, ExportOptions::default()).unwrap();
        assert!(single.contains("#define ND 1\n#define NU 1\n"));
    }

    #[test]
    fn minimum_export() {
        let platform = PlatformConfig::default();
        let problem = ProblemSpec::minimum_default(16).unwrap();
        let text = export_promela(&platform, &problem, ExportOptions::default()).unwrap();
        assert!(text.contains("glob[i] = size - i"));
        assert!(text.contains("glob_id = (WG > NP"));
        assert!(text.contains("u_pex[u * NP] ! reduce(nwg, 0)"));
        assert!(balanced(&text));

        let problem = ProblemSpec::minimum(vec![3, 9, 1, 4]).unwrap();
        let text = export_promela(&platform, &problem, ExportOptions::default()).unwrap();
        assert!(text.contains("glob[2] = 1;"));
        assert!(!text.contains("glob[i] = size - i"));
    }
}
