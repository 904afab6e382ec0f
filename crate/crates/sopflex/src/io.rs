//! File formats and atomic output.
//!
//! Networks are read from the native JSON document or from the common
//! branch-table CSV. Every writer goes through [`write_atomic`] or
//! [`write_dir_atomic`], so a failed run never leaves a truncated file.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sopflex_core::capability::{NamedDesign, SopDesign};
use sopflex_core::network::{Branch, BranchStatus, Bus, BusKind, Generator, NetworkModel};

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline. Floats use the shortest decimal
/// that round-trips.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory values serialize");
    s.push('\n');
    s
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = parent_dir(path);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Write a set of files into `dir`. A fresh directory appears in one
/// rename; into an existing directory each file is renamed into place only
/// after all of them were staged.
pub fn write_dir_atomic(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    let parent = parent_dir(dir);
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let stage = tempfile::Builder::new()
        .prefix(".sopflex-")
        .tempdir_in(parent)
        .map_err(|e| Error::io(parent, e))?;
    for (name, bytes) in files {
        let p = stage.path().join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
    }
    if !dir.exists() {
        let staged = stage.keep();
        return fs::rename(&staged, dir).map_err(|e| {
            let _ = fs::remove_dir_all(&staged);
            Error::io(dir, e)
        });
    }
    for (name, _) in files {
        let target = dir.join(name);
        fs::rename(stage.path().join(name), &target).map_err(|e| Error::io(&target, e))?;
    }
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Load and validate a network; `.csv` selects the branch-table layout.
pub fn load_network(path: &Path) -> Result<NetworkModel> {
    let text = read_text(path)?;
    let net = if is_csv(path) {
        network_from_csv(&text, path)?
    } else {
        serde_json::from_str::<NetworkModel>(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?
    };
    net.validate()?;
    Ok(net)
}

pub fn save_network(path: &Path, net: &NetworkModel) -> Result<()> {
    let text = if is_csv(path) {
        network_to_csv(net).map_err(|m| Error::format(path, m))?
    } else {
        to_json(net)
    };
    write_atomic(path, text.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
struct BranchRow {
    from: u32,
    to: u32,
    r_ohm: f64,
    x_ohm: f64,
    p_kw: f64,
    q_kvar: f64,
}

const CSV_COLUMNS: [&str; 6] = ["from", "to", "r_ohm", "x_ohm", "p_kw", "q_kvar"];

fn parse_list<T: std::str::FromStr>(value: &str) -> Option<Vec<T>> {
    value.split(',').map(|s| s.trim().parse().ok()).collect()
}

/// Branch table with one row per line section (`from,to,r_ohm,x_ohm,p_kw,
/// q_kvar`, loads at the receiving bus) plus `# key: value` directives:
/// `sop_buses: a, b, c` (required), `generator: bus, kW, profile`
/// (repeatable), `s_base_kva`, `v_base_kv` and `slack`. Lines starting with
/// `#` that are not directives are comments.
pub fn network_from_csv(text: &str, path: &Path) -> Result<NetworkModel> {
    let err = |line: usize, m: String| Error::format(path, format!("line {line}: {m}"));
    let mut sop_buses = None;
    let mut generators = Vec::new();
    let mut s_base_kva = 10_000.0;
    let mut v_base_kv = 12.66;
    let mut slack = None;
    let mut table = String::new();
    let mut table_lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let Some(rest) = line.trim_start().strip_prefix('#') else {
            if !line.trim().is_empty() {
                table.push_str(line);
                table.push('\n');
                table_lines.push(n);
            }
            continue;
        };
        let Some((key, value)) = rest.split_once(':') else {
            continue;
        };
        let value = value.trim();
        match key.trim() {
            "sop_buses" => {
                let v: Vec<u32> = parse_list(value).ok_or_else(|| err(n, format!("bad sop_buses {value:?}")))?;
                let v: [u32; 3] = v
                    .try_into()
                    .map_err(|_| err(n, String::from("sop_buses needs exactly three buses")))?;
                sop_buses = Some(v);
            }
            "generator" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                let [bus, kw, key] = parts[..] else {
                    return Err(err(n, format!("generator needs bus, kW, profile: {value:?}")));
                };
                generators.push(Generator {
                    bus: bus.parse().map_err(|_| err(n, format!("bad generator bus {bus:?}")))?,
                    p_rated_kw: kw.parse().map_err(|_| err(n, format!("bad generator rating {kw:?}")))?,
                    profile_key: key.to_string(),
                });
            }
            "s_base_kva" => s_base_kva = value.parse().map_err(|_| err(n, format!("bad s_base_kva {value:?}")))?,
            "v_base_kv" => v_base_kv = value.parse().map_err(|_| err(n, format!("bad v_base_kv {value:?}")))?,
            "slack" => slack = Some(value.parse::<u32>().map_err(|_| err(n, format!("bad slack {value:?}")))?),
            _ => {}
        }
    }
    let sop_buses = sop_buses.ok_or_else(|| Error::format(path, "missing `# sop_buses: a, b, c` directive"))?;

    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(table.as_bytes());
    let headers = reader.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    for col in CSV_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::format(path, format!("missing column {col:?}")));
        }
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.deserialize::<BranchRow>().enumerate() {
        let line = table_lines.get(k + 1).copied().unwrap_or(0);
        rows.push(rec.map_err(|e| err(line, e.to_string()))?);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "branch table is empty"));
    }

    let receiving: BTreeSet<u32> = rows.iter().map(|r| r.to).collect();
    let slack = match slack {
        Some(s) => s,
        None => {
            let roots: BTreeSet<u32> = rows.iter().map(|r| r.from).filter(|b| !receiving.contains(b)).collect();
            match roots.len() {
                1 => *roots.iter().next().expect("one root"),
                _ => return Err(Error::format(path, format!("cannot infer the slack bus from roots {roots:?}"))),
            }
        }
    };
    let mut buses = vec![Bus {
        id: slack,
        kind: BusKind::Slack,
        p_load_kw: 0.0,
        q_load_kvar: 0.0,
        v_base_kv,
    }];
    let mut seen = BTreeSet::from([slack]);
    let mut branches = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        if !seen.insert(r.to) {
            return Err(err(table_lines[k + 1], format!("bus {} is a receiving end twice", r.to)));
        }
        buses.push(Bus {
            id: r.to,
            kind: BusKind::Pq,
            p_load_kw: r.p_kw,
            q_load_kvar: r.q_kvar,
            v_base_kv,
        });
        branches.push(Branch {
            from_bus: r.from,
            to_bus: r.to,
            r_ohm: r.r_ohm,
            x_ohm: r.x_ohm,
            status: BranchStatus::Closed,
        });
    }
    Ok(NetworkModel::new(buses, branches, generators, sop_buses, s_base_kva)?)
}

/// Inverse of [`network_from_csv`] for networks the table can express:
/// one voltage base, no slack load, every branch closed and each load bus
/// fed by exactly one branch.
pub fn network_to_csv(net: &NetworkModel) -> std::result::Result<String, String> {
    let slack = &net.buses[net.slack_index()];
    if slack.p_load_kw != 0.0 || slack.q_load_kvar != 0.0 {
        return Err(String::from("slack bus load cannot be expressed in the branch table"));
    }
    if net.buses.iter().any(|b| b.v_base_kv != slack.v_base_kv) {
        return Err(String::from("branch table supports a single voltage base"));
    }
    if net.branches.iter().any(|b| b.status == BranchStatus::Open) {
        return Err(String::from("branch table cannot hold open branches"));
    }
    let [a, b, c] = net.sop_buses;
    let mut out = format!(
        "# s_base_kva: {}\n# v_base_kv: {}\n# slack: {}\n# sop_buses: {a}, {b}, {c}\n",
        net.s_base_kva, slack.v_base_kv, slack.id
    );
    for g in &net.generators {
        out.push_str(&format!("# generator: {}, {}, {}\n", g.bus, g.p_rated_kw, g.profile_key));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for br in &net.branches {
        let to = &net.buses[net.bus_index(br.to_bus).expect("validated")];
        w.serialize(BranchRow {
            from: br.from_bus,
            to: br.to_bus,
            r_ohm: br.r_ohm,
            x_ohm: br.x_ohm,
            p_kw: to.p_load_kw,
            q_kvar: to.q_load_kvar,
        })
        .map_err(|e| e.to_string())?;
    }
    let table = String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).expect("csv writes utf-8");
    out.push_str(&table);
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct DesignFile {
    #[serde(default)]
    name: Option<String>,
    p_plus_kva: f64,
    alpha: [f64; 3],
    #[serde(default = "yes")]
    hybrid: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DesignList {
    Many(Vec<DesignFile>),
    One(DesignFile),
}

fn named(d: DesignFile, fallback: String) -> Result<NamedDesign> {
    Ok(NamedDesign {
        name: d.name.unwrap_or(fallback),
        design: SopDesign::new(d.p_plus_kva, d.alpha)?,
        hybrid: d.hybrid,
    })
}

/// One design object or a list of them. Unnamed designs take the file
/// stem, with the list position appended for lists.
pub fn load_designs(path: &Path) -> Result<Vec<NamedDesign>> {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let designs = match load_json::<DesignList>(path)? {
        DesignList::One(d) => vec![named(d, stem)?],
        DesignList::Many(list) => list
            .into_iter()
            .enumerate()
            .map(|(i, d)| named(d, format!("{stem} {}", i + 1)))
            .collect::<Result<_>>()?,
    };
    if designs.is_empty() {
        return Err(Error::format(path, "no designs"));
    }
    Ok(designs)
}

/// File-name-safe form of a design name: lowercase ASCII alphanumerics
/// with runs of anything else collapsed to `_`.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let trimmed = out.trim_matches('_');
    if trimmed.is_empty() {
        String::from("design")
    } else {
        trimmed.to_string()
    }
}
