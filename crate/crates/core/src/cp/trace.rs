//! Control signals and their canonical serialisation.

use serde::Serialize;

use super::registry::SignalKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSignal {
    pub name: String,
    pub kind: SignalKind,
    pub t_on: u64,
    pub t_off: u64,
    /// `key=value` pairs. Type I signals carry `ref` and `cur`.
    pub params: Vec<String>,
}

impl ControlSignal {
    pub fn duration(&self) -> u64 {
        self.t_off - self.t_on
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SignalTrace {
    pub signals: Vec<ControlSignal>,
    pub t_i: u64,
    pub t_c: u64,
}

impl SignalTrace {
    /// Stable sort by onset, then name.
    pub fn sorted(&self) -> Vec<&ControlSignal> {
        let mut v: Vec<&ControlSignal> = self.signals.iter().collect();
        v.sort_by(|a, b| a.t_on.cmp(&b.t_on).then_with(|| a.name.cmp(&b.name)));
        v
    }

    pub fn count(&self, name: &str) -> usize {
        self.signals.iter().filter(|s| s.name == name).count()
    }

    /// Onset of the first signal called `name`.
    pub fn first(&self, name: &str) -> Option<u64> {
        self.signals.iter().filter(|s| s.name == name).map(|s| s.t_on).min()
    }

    /// Signals running past the deadline.
    pub fn overruns(&self) -> Vec<&ControlSignal> {
        self.signals.iter().filter(|s| s.t_off > self.t_c).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Text,
}

pub fn emit_trace(trace: &SignalTrace, format: TraceFormat) -> String {
    let rows: Vec<[String; 5]> = trace
        .sorted()
        .into_iter()
        .map(|s| {
            [
                s.name.clone(),
                s.kind.as_str().to_string(),
                s.t_on.to_string(),
                s.t_off.to_string(),
                s.params.join(" "),
            ]
        })
        .collect();
    let header = ["signal", "kind", "t_on", "t_off", "params"];
    match format {
        TraceFormat::Csv => {
            let mut out = header.join(",");
            out.push('\n');
            for r in rows {
                let cells: Vec<String> = r.iter().map(|c| crate::oracle::csv_field(c)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        TraceFormat::Text => {
            let mut w = header.map(str::len);
            for r in &rows {
                for (i, c) in r.iter().enumerate() {
                    w[i] = w[i].max(c.len());
                }
            }
            let line = |cells: [&str; 5]| {
                let mut s = String::new();
                for (i, c) in cells.iter().enumerate() {
                    if i == 4 {
                        s.push_str(c);
                    } else {
                        s.push_str(&format!("{:<width$}  ", c, width = w[i]));
                    }
                }
                s.trim_end().to_string() + "\n"
            };
            let mut out = line(header);
            for r in &rows {
                out.push_str(&line([&r[0], &r[1], &r[2], &r[3], &r[4]]));
            }
            out
        }
    }
}
