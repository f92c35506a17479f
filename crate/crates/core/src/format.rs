//! Sectioned plain-text network files.
//!
//! ```text
//! # comment
//! [OPTIONS]
//! viscosity_ft2_s     1.21e-5
//! reynolds_threshold  4000
//! [RESERVOIR]
//! # id  head_ft
//! 0     850
//! [JUNCTIONS]
//! # id  demand_gpm
//! 1     0
//! [PIPES]
//! # id from to length_ft diameter_in roughness_c
//! 1    0    1  3000      14          100
//! ```
//!
//! Columns are whitespace separated, `#` starts a comment, sections may come
//! in any order and `[OPTIONS]` may be omitted. Numbers are plain decimal or
//! scientific notation with `.` as the separator.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::network::{Junction, Network, Pipe, Reservoir, Violation};
use crate::solver::{InitialFlow, SolverConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    /// 1-based; `None` when the problem is not tied to one line.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line: Some(line),
        message: message.into(),
    })
}

/// Values from `[OPTIONS]`. Unset keys leave the defaults alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileOptions {
    pub viscosity_ft2_s: Option<f64>,
    pub reynolds_threshold: Option<f64>,
    pub tolerance_gpm: Option<f64>,
    pub max_iterations: Option<usize>,
    pub initial_flow_gpm: Option<f64>,
    pub flow_floor_cfs: Option<f64>,
}

impl FileOptions {
    pub fn apply(&self, config: &mut SolverConfig) {
        if let Some(v) = self.viscosity_ft2_s {
            config.fluid.kinematic_viscosity = v;
        }
        if let Some(v) = self.reynolds_threshold {
            config.fluid.turbulence_threshold = v;
        }
        if let Some(v) = self.tolerance_gpm {
            config.tolerance_gpm = v;
        }
        if let Some(v) = self.max_iterations {
            config.max_iterations = v;
        }
        if let Some(v) = self.initial_flow_gpm {
            config.initial_flow = InitialFlow::Uniform(v);
        }
        if let Some(v) = self.flow_floor_cfs {
            config.flow_floor_cfs = v;
        }
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |key, value: Option<String>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        push("viscosity_ft2_s", self.viscosity_ft2_s.map(|v| v.to_string()));
        push("reynolds_threshold", self.reynolds_threshold.map(|v| v.to_string()));
        push("tolerance_gpm", self.tolerance_gpm.map(|v| v.to_string()));
        push("max_iterations", self.max_iterations.map(|v| v.to_string()));
        push("initial_flow_gpm", self.initial_flow_gpm.map(|v| v.to_string()));
        push("flow_floor_cfs", self.flow_floor_cfs.map(|v| v.to_string()));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFile {
    pub network: Network,
    pub options: FileOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Section {
    Options,
    Reservoir,
    Junctions,
    Pipes,
}

impl Section {
    fn from_header(name: &str) -> Option<Self> {
        match name.trim().to_ascii_uppercase().as_str() {
            "OPTIONS" => Some(Section::Options),
            "RESERVOIR" => Some(Section::Reservoir),
            "JUNCTIONS" => Some(Section::Junctions),
            "PIPES" => Some(Section::Pipes),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Section::Options => "OPTIONS",
            Section::Reservoir => "RESERVOIR",
            Section::Junctions => "JUNCTIONS",
            Section::Pipes => "PIPES",
        }
    }

    fn columns(self) -> &'static str {
        match self {
            Section::Options => "key value",
            Section::Reservoir => "id head_ft",
            Section::Junctions => "id demand_gpm",
            Section::Pipes => "id from to length_ft diameter_in roughness_c",
        }
    }
}

fn number(token: &str, what: &str, line: usize) -> Result<f64, ParseError> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(line, format!("{what}: expected a finite number, found `{token}`")),
    }
}

fn index(token: &str, what: &str, line: usize) -> Result<usize, ParseError> {
    token
        .parse::<usize>()
        .or_else(|_| err(line, format!("{what}: expected a non-negative integer, found `{token}`")))
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut options = FileOptions::default();
        let mut seen_sections: HashMap<Section, usize> = HashMap::new();
        let mut seen_options: HashMap<String, usize> = HashMap::new();
        let mut reservoir: Option<(Reservoir, usize)> = None;
        let mut junctions: Vec<(Junction, usize)> = Vec::new();
        let mut pipes: Vec<(Pipe, usize)> = Vec::new();
        let mut current: Option<Section> = None;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return err(line, format!("malformed section header `{content}`"));
                };
                let Some(section) = Section::from_header(name) else {
                    return err(line, format!("unknown section [{}]", name.trim()));
                };
                if let Some(first) = seen_sections.insert(section, line) {
                    return err(line, format!("duplicate section [{}] (first at line {first})", section.name()));
                }
                current = Some(section);
                continue;
            }

            let Some(section) = current else {
                return err(line, "data before the first section header");
            };
            let cols: Vec<&str> = content.split_whitespace().collect();
            let expected = section.columns().split(' ').count();
            if cols.len() != expected {
                return err(
                    line,
                    format!(
                        "[{}] row needs {expected} columns ({}), found {}",
                        section.name(),
                        section.columns(),
                        cols.len()
                    ),
                );
            }

            match section {
                Section::Options => {
                    let key = cols[0].to_ascii_lowercase();
                    if let Some(first) = seen_options.insert(key.clone(), line) {
                        return err(line, format!("duplicate option `{key}` (first at line {first})"));
                    }
                    let value = cols[1];
                    match key.as_str() {
                        "viscosity_ft2_s" => options.viscosity_ft2_s = Some(number(value, &key, line)?),
                        "reynolds_threshold" => options.reynolds_threshold = Some(number(value, &key, line)?),
                        "tolerance_gpm" => options.tolerance_gpm = Some(number(value, &key, line)?),
                        "max_iterations" => options.max_iterations = Some(index(value, &key, line)?),
                        "initial_flow_gpm" => options.initial_flow_gpm = Some(number(value, &key, line)?),
                        "flow_floor_cfs" => options.flow_floor_cfs = Some(number(value, &key, line)?),
                        _ => return err(line, format!("unknown option `{}`", cols[0])),
                    }
                }
                Section::Reservoir => {
                    if let Some((_, first)) = reservoir {
                        return err(line, format!("second reservoir row (first at line {first})"));
                    }
                    let id = index(cols[0], "reservoir id", line)?;
                    if id != Reservoir::ID {
                        return err(line, format!("reservoir id must be 0, found {id}"));
                    }
                    let head_ft = number(cols[1], "head_ft", line)?;
                    reservoir = Some((Reservoir { head_ft }, line));
                }
                Section::Junctions => {
                    let id = index(cols[0], "junction id", line)?;
                    if let Some((_, first)) = junctions.iter().find(|(j, _)| j.id == id) {
                        return err(line, format!("duplicate junction id {id} (first at line {first})"));
                    }
                    let demand_gpm = number(cols[1], "demand_gpm", line)?;
                    junctions.push((Junction { id, demand_gpm }, line));
                }
                Section::Pipes => {
                    let id = index(cols[0], "pipe id", line)?;
                    if let Some((_, first)) = pipes.iter().find(|(p, _)| p.id == id) {
                        return err(line, format!("duplicate pipe id {id} (first at line {first})"));
                    }
                    pipes.push((
                        Pipe {
                            id,
                            from: index(cols[1], "from", line)?,
                            to: index(cols[2], "to", line)?,
                            length_ft: number(cols[3], "length_ft", line)?,
                            diameter_in: number(cols[4], "diameter_in", line)?,
                            roughness: number(cols[5], "roughness_c", line)?,
                        },
                        line,
                    ));
                }
            }
        }

        for section in [Section::Reservoir, Section::Junctions, Section::Pipes] {
            if !seen_sections.contains_key(&section) {
                return Err(ParseError {
                    line: None,
                    message: format!("missing section [{}]", section.name()),
                });
            }
        }
        let Some((reservoir, reservoir_line)) = reservoir else {
            return Err(ParseError {
                line: seen_sections.get(&Section::Reservoir).copied(),
                message: "[RESERVOIR] has no row".into(),
            });
        };

        junctions.sort_by_key(|(j, _)| j.id);
        pipes.sort_by_key(|(p, _)| p.id);
        let junction_lines: HashMap<usize, usize> = junctions.iter().map(|(j, l)| (j.id, *l)).collect();
        let pipe_lines: HashMap<usize, usize> = pipes.iter().map(|(p, l)| (p.id, *l)).collect();

        let network = Network::new(
            reservoir,
            junctions.into_iter().map(|(j, _)| j).collect(),
            pipes.into_iter().map(|(p, _)| p).collect(),
        );
        if let Some(v) = network.validate().violations.into_iter().next() {
            let line = match &v {
                Violation::ReservoirHead(_) => Some(reservoir_line),
                Violation::NoJunctions => seen_sections.get(&Section::Junctions).copied(),
                Violation::JunctionId { found, .. } => junction_lines.get(found).copied(),
                Violation::NegativeDemand { junction, .. } => junction_lines.get(junction).copied(),
                Violation::PipeId { found, .. } => pipe_lines.get(found).copied(),
                Violation::PipeParameter { pipe, .. }
                | Violation::SelfLoop { pipe }
                | Violation::DanglingEndpoint { pipe, .. } => pipe_lines.get(pipe).copied(),
                Violation::Disconnected { .. } => None,
            };
            return Err(ParseError {
                line,
                message: v.to_string(),
            });
        }

        Ok(Self { network, options })
    }

    /// Writes the file back out; parsing the result gives an equal value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let entries = self.options.entries();
        if !entries.is_empty() {
            out.push_str("[OPTIONS]\n");
            for (key, value) in entries {
                let _ = writeln!(out, "{key} {value}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "[RESERVOIR]\n# id head_ft\n0 {}\n", self.network.reservoir().head_ft);
        out.push_str("[JUNCTIONS]\n# id demand_gpm\n");
        for j in self.network.junctions() {
            let _ = writeln!(out, "{} {}", j.id, j.demand_gpm);
        }
        out.push_str("\n[PIPES]\n# id from to length_ft diameter_in roughness_c\n");
        for p in self.network.pipes() {
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                p.id, p.from, p.to, p.length_ft, p.diameter_in, p.roughness
            );
        }
        out
    }
}

impl FromStr for NetworkFile {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}
