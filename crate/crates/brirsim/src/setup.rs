//! Line-oriented setup files.
//!
//! ```text
//! % 5.1 x 7.1 x 3 m room
//! room.dimension = [5.1 7.1 3]
//! room.surface.absorption = [0.28 0.28 0.28 0.28 0.28 0.28; ...]  % 6 rows
//! options.rays = 100000
//! source(1).location = [4.05 3.05 1.75]
//! source(1).description = cardioid
//! receiver(1).location = [1.5 1.5 1.75]
//! receiver(1).description = SOFA "kemar.hrtf" interpolate true
//! output.path = out
//! ```
//!
//! Every key may appear once. Unspecified keys take the defaults of
//! [`SimOptions`] and [`RoomSpec::uniform`]; `room.dimension` and a
//! `location` for every declared source and receiver are required.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use brirsim_core::geometry::Orientation;
use brirsim_core::scene::{
    Directivity, InterpolationMode, OutputFormat, OutputSpec, ReceiverKind, ReceiverSpec, RoomSpec, SimOptions,
    SimulationSpec, SourceSpec, SurfaceSpec, SURFACE_COUNT,
};
use brirsim_core::Vec3;
use thiserror::Error;

/// Absorption used when the setup gives none.
pub const DEFAULT_ABSORPTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetupError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: unknown key {key}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key} (first set on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: {key} expects {expected}")]
    Type { line: usize, key: String, expected: String },
    #[error("missing required key {0}")]
    Missing(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Matrix(Vec<Vec<f64>>),
    Words(Vec<String>),
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: Value,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> SetupError {
    SetupError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn parse_matrix(text: &str, line: usize, column: usize) -> Result<Value, SetupError> {
    let close = text.find(']').ok_or_else(|| syntax(line, column, "unterminated '['"))?;
    let rest = text[close + 1..].trim();
    if !rest.is_empty() {
        return Err(syntax(line, column + close + 1, format!("unexpected text after ']': {rest}")));
    }
    let mut rows = Vec::new();
    for row in text[1..close].split(';') {
        let mut values = Vec::new();
        for token in row.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let offset = token.as_ptr() as usize - text.as_ptr() as usize;
            let v: f64 = token
                .parse()
                .map_err(|_| syntax(line, column + offset, format!("not a number: {token}")))?;
            values.push(v);
        }
        rows.push(values);
    }
    if rows.len() > 1 && rows.last().is_some_and(Vec::is_empty) {
        rows.pop();
    }
    Ok(Value::Matrix(rows))
}

fn parse_words(text: &str, line: usize, column: usize) -> Result<Value, SetupError> {
    let mut words = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '"' {
            chars.next();
            let mut word = String::new();
            let mut closed = false;
            for (_, c) in chars.by_ref() {
                if c == '"' {
                    closed = true;
                    break;
                }
                word.push(c);
            }
            if !closed {
                return Err(syntax(line, column + i, "unterminated quote"));
            }
            words.push(word);
        } else {
            let mut word = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                word.push(c);
                chars.next();
            }
            words.push(word);
        }
    }
    Ok(Value::Words(words))
}

/// Split off a `%` comment that is not inside quotes.
fn strip_comment(raw: &str) -> &str {
    let mut quoted = false;
    for (i, c) in raw.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '%' if !quoted => return &raw[..i],
            _ => {}
        }
    }
    raw
}

fn tokenize(text: &str) -> Result<Vec<(String, Entry)>, SetupError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw);
        if content.trim().is_empty() {
            continue;
        }
        let eq = content
            .find('=')
            .ok_or_else(|| syntax(line, content.len() - content.trim_start().len() + 1, "expected 'key = value'"))?;
        let key = content[..eq].trim();
        if key.is_empty() {
            return Err(syntax(line, 1, "missing key before '='"));
        }
        if let Some(pos) = key.find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '(' | ')' | '_'))) {
            let start = content.len() - content.trim_start().len();
            return Err(syntax(line, start + pos + 1, format!("invalid character in key {key:?}")));
        }
        let value_text = content[eq + 1..].trim_start();
        let column = eq + 2 + (content[eq + 1..].len() - value_text.len());
        let value_text = value_text.trim_end();
        if value_text.is_empty() {
            return Err(syntax(line, column, format!("missing value for {key}")));
        }
        let value = if value_text.starts_with('[') {
            parse_matrix(value_text, line, column)?
        } else {
            parse_words(value_text, line, column)?
        };
        out.push((key.to_ascii_lowercase(), Entry { line, value }));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Source,
    Receiver,
}

/// Split `source(3).location` into its section, 1-based index and field.
fn indexed_key(key: &str) -> Option<(Section, usize, &str)> {
    let (section, rest) = if let Some(r) = key.strip_prefix("source(") {
        (Section::Source, r)
    } else if let Some(r) = key.strip_prefix("receiver(") {
        (Section::Receiver, r)
    } else {
        return None;
    };
    let close = rest.find(')')?;
    let index: usize = rest[..close].parse().ok()?;
    let field = rest[close + 1..].strip_prefix('.')?;
    Some((section, index, field))
}

const GLOBAL_KEYS: &[&str] = &[
    "room.dimension",
    "room.temperature",
    "room.humidity",
    "room.pressure",
    "room.surface.absorption",
    "room.surface.scattering",
    "options.fs",
    "options.duration",
    "options.bandcenters",
    "options.ism",
    "options.ismorder",
    "options.diffuse",
    "options.rays",
    "options.detectionradius",
    "options.threshold",
    "options.seed",
    "output.path",
    "output.format",
];

const INDEXED_FIELDS: &[&str] = &["location", "orientation", "description"];

struct Reader {
    entries: BTreeMap<String, Entry>,
}

impl Reader {
    fn type_error(&self, key: &str, expected: &str) -> SetupError {
        SetupError::Type {
            line: self.entries[key].line,
            key: key.to_string(),
            expected: expected.to_string(),
        }
    }

    fn matrix(&self, key: &str) -> Option<Result<&Vec<Vec<f64>>, SetupError>> {
        self.entries.get(key).map(|e| match &e.value {
            Value::Matrix(m) => Ok(m),
            Value::Words(w) => {
                // bare numbers are 1x1 matrices, handled by the callers
                let _ = w;
                Err(self.type_error(key, "a bracketed list of numbers"))
            }
        })
    }

    fn vector(&self, key: &str, len: Option<usize>) -> Result<Option<Vec<f64>>, SetupError> {
        let expected = match len {
            Some(n) => format!("a vector of {n} numbers"),
            None => "a vector of numbers".to_string(),
        };
        match self.matrix(key) {
            None => Ok(None),
            Some(Err(_)) => Err(self.type_error(key, &expected)),
            Some(Ok(m)) => {
                if m.len() != 1 || len.is_some_and(|n| m[0].len() != n) {
                    return Err(self.type_error(key, &expected));
                }
                Ok(Some(m[0].clone()))
            }
        }
    }

    fn vec3(&self, key: &str) -> Result<Option<Vec3>, SetupError> {
        Ok(self.vector(key, Some(3))?.map(|v| Vec3::new(v[0], v[1], v[2])))
    }

    fn words(&self, key: &str) -> Option<&[String]> {
        match self.entries.get(key).map(|e| &e.value) {
            Some(Value::Words(w)) => Some(w),
            _ => None,
        }
    }

    fn word(&self, key: &str) -> Result<Option<&str>, SetupError> {
        if !self.entries.contains_key(key) {
            return Ok(None);
        }
        match self.words(key) {
            Some([w]) => Ok(Some(w.as_str())),
            _ => Err(self.type_error(key, "a single word")),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, SetupError> {
        match self.word(key) {
            Ok(None) => Ok(None),
            Ok(Some(w)) => w.parse().map(Some).map_err(|_| self.type_error(key, "a number")),
            Err(_) => Err(self.type_error(key, "a number")),
        }
    }

    fn integer<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, SetupError> {
        match self.word(key) {
            Ok(None) => Ok(None),
            Ok(Some(w)) => w.parse().map(Some).map_err(|_| self.type_error(key, what)),
            Err(_) => Err(self.type_error(key, what)),
        }
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, SetupError> {
        match self.word(key) {
            Ok(None) => Ok(None),
            Ok(Some(w)) => parse_bool(w).map(Some).ok_or_else(|| self.type_error(key, "true or false")),
            Err(_) => Err(self.type_error(key, "true or false")),
        }
    }

    /// Six rows of per-band values; a single row applies to every wall.
    fn surfaces(&self, key: &str, bands: usize) -> Result<Option<Vec<Vec<f64>>>, SetupError> {
        let expected = format!("1 or {SURFACE_COUNT} rows of {bands} numbers");
        match self.matrix(key) {
            None => Ok(None),
            Some(Err(_)) => Err(self.type_error(key, &expected)),
            Some(Ok(m)) => {
                if m.iter().any(|r| r.len() != bands) {
                    return Err(self.type_error(key, &expected));
                }
                match m.len() {
                    1 => Ok(Some(vec![m[0].clone(); SURFACE_COUNT])),
                    SURFACE_COUNT => Ok(Some(m.clone())),
                    _ => Err(self.type_error(key, &expected)),
                }
            }
        }
    }
}

fn parse_bool(w: &str) -> Option<bool> {
    match w.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

fn parse_interpolation(w: &str) -> Option<InterpolationMode> {
    match w.to_ascii_lowercase().as_str() {
        "nearest" => Some(InterpolationMode::Nearest),
        "interpolate" | "bilinear" => Some(InterpolationMode::Interpolate),
        _ => None,
    }
}

/// Parse a setup file into an unvalidated spec.
pub fn parse_setup(text: &str) -> Result<SimulationSpec, SetupError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    let mut indices: BTreeMap<(Section, usize), usize> = BTreeMap::new();
    for (key, entry) in tokenize(text)? {
        if let Some((section, index, field)) = indexed_key(&key) {
            if index == 0 || !INDEXED_FIELDS.contains(&field) {
                return Err(SetupError::UnknownKey { line: entry.line, key });
            }
            indices.entry((section, index)).or_insert(entry.line);
        } else if !GLOBAL_KEYS.contains(&key.as_str()) {
            return Err(SetupError::UnknownKey { line: entry.line, key });
        }
        if let Some(first) = entries.get(&key) {
            return Err(SetupError::Duplicate {
                line: entry.line,
                key,
                first: first.line,
            });
        }
        entries.insert(key, entry);
    }
    let r = Reader { entries };

    let defaults = SimOptions::default();
    let band_centers = r.vector("options.bandcenters", None)?.unwrap_or(defaults.band_centers.clone());
    let bands = band_centers.len();
    let options = SimOptions {
        fs: r.integer("options.fs", "an integer sample rate")?.unwrap_or(defaults.fs),
        ir_duration: r.number("options.duration")?.unwrap_or(defaults.ir_duration),
        band_centers,
        ism_enabled: r.flag("options.ism")?.unwrap_or(defaults.ism_enabled),
        ism_max_order: r.integer("options.ismorder", "a non-negative integer")?.unwrap_or(defaults.ism_max_order),
        diffuse_enabled: r.flag("options.diffuse")?.unwrap_or(defaults.diffuse_enabled),
        n_rays: r.integer("options.rays", "a non-negative integer")?.unwrap_or(defaults.n_rays),
        detection_radius: r.number("options.detectionradius")?.unwrap_or(defaults.detection_radius),
        seed: r.integer("options.seed", "an unsigned 64-bit integer")?.unwrap_or(defaults.seed),
        energy_threshold: r.number("options.threshold")?.unwrap_or(defaults.energy_threshold),
    };

    let dimensions = r.vec3("room.dimension")?.ok_or_else(|| SetupError::Missing("room.dimension".into()))?;
    let absorption = r
        .surfaces("room.surface.absorption", bands)?
        .unwrap_or_else(|| vec![vec![DEFAULT_ABSORPTION; bands]; SURFACE_COUNT]);
    let scattering = r
        .surfaces("room.surface.scattering", bands)?
        .unwrap_or_else(|| vec![vec![0.0; bands]; SURFACE_COUNT]);
    let room = RoomSpec {
        dimensions,
        surfaces: absorption
            .into_iter()
            .zip(scattering)
            .map(|(absorption, scattering)| SurfaceSpec { absorption, scattering })
            .collect(),
        temperature: r.number("room.temperature")?.unwrap_or(RoomSpec::DEFAULT_TEMPERATURE),
        humidity: r.number("room.humidity")?.unwrap_or(RoomSpec::DEFAULT_HUMIDITY),
        pressure: r.number("room.pressure")?.unwrap_or(RoomSpec::DEFAULT_PRESSURE),
    };

    let count = |section: Section| -> Result<usize, SetupError> {
        let declared: Vec<usize> = indices.keys().filter(|(s, _)| *s == section).map(|&(_, i)| i).collect();
        let n = declared.last().copied().unwrap_or(0);
        let name = if section == Section::Source { "source" } else { "receiver" };
        for i in 1..=n {
            if !declared.contains(&i) {
                return Err(SetupError::Missing(format!("{name}({i}).location")));
            }
        }
        Ok(n)
    };

    let mut sources = Vec::new();
    for i in 1..=count(Section::Source)? {
        let base = format!("source({i})");
        let key = |f: &str| format!("{base}.{f}");
        let position = r.vec3(&key("location"))?.ok_or_else(|| SetupError::Missing(key("location")))?;
        let orientation = r.vec3(&key("orientation"))?.map_or(Orientation::default(), |v| Orientation::new(v.x, v.y, v.z));
        let directivity = match r.words(&key("description")) {
            None if r.entries.contains_key(&key("description")) => {
                return Err(r.type_error(&key("description"), "a directivity name"))
            }
            None => Directivity::Omnidirectional,
            Some([name]) => Directivity::from_name(&name.to_ascii_lowercase())
                .ok_or_else(|| r.type_error(&key("description"), "one of omnidirectional, subcardioid, cardioid, hypercardioid, dipole"))?,
            Some(_) => return Err(r.type_error(&key("description"), "a directivity name")),
        };
        sources.push(SourceSpec {
            position,
            orientation,
            directivity,
        });
    }

    let mut receivers = Vec::new();
    for i in 1..=count(Section::Receiver)? {
        let base = format!("receiver({i})");
        let key = |f: &str| format!("{base}.{f}");
        let position = r.vec3(&key("location"))?.ok_or_else(|| SetupError::Missing(key("location")))?;
        let orientation = r.vec3(&key("orientation"))?.map_or(Orientation::default(), |v| Orientation::new(v.x, v.y, v.z));
        let desc_key = key("description");
        let expected = "omnidirectional or SOFA <path> <nearest|interpolate> <true|false>";
        let kind = match r.words(&desc_key) {
            None if r.entries.contains_key(&desc_key) => return Err(r.type_error(&desc_key, expected)),
            None => ReceiverKind::Omnidirectional,
            Some([w]) if w.eq_ignore_ascii_case("omnidirectional") => ReceiverKind::Omnidirectional,
            Some([tag, path, rest @ ..]) if tag.eq_ignore_ascii_case("sofa") && rest.len() <= 2 => {
                let interpolation = match rest.first() {
                    None => InterpolationMode::Nearest,
                    Some(w) => parse_interpolation(w).ok_or_else(|| r.type_error(&desc_key, expected))?,
                };
                let normalize = match rest.get(1) {
                    None => false,
                    Some(w) => parse_bool(w).ok_or_else(|| r.type_error(&desc_key, expected))?,
                };
                ReceiverKind::Hrtf {
                    path: path.clone(),
                    interpolation,
                    normalize,
                }
            }
            Some(_) => return Err(r.type_error(&desc_key, expected)),
        };
        receivers.push(ReceiverSpec {
            position,
            orientation,
            kind,
        });
    }

    let output = OutputSpec {
        path: match r.word("output.path")? {
            Some(p) => p.to_string(),
            None => OutputSpec::default().path,
        },
        format: match r.word("output.format")? {
            None => OutputFormat::Wav,
            Some(w) => match w.to_ascii_lowercase().as_str() {
                "wav" => OutputFormat::Wav,
                "f64raw" => OutputFormat::F64Raw,
                _ => return Err(r.type_error("output.format", "wav or f64raw")),
            },
        },
    };

    Ok(SimulationSpec {
        room,
        options,
        sources,
        receivers,
        output,
    })
}

fn fmt_list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    format!("[{}]", items.join(" "))
}

fn fmt_vec3(v: Vec3) -> String {
    fmt_list(&v.to_array())
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

/// Write `spec` in the setup grammar. Parsing the result gives `spec` back
/// as long as paths contain no double quotes or line breaks.
pub fn serialize_setup(spec: &SimulationSpec) -> String {
    let mut out = String::new();
    let room = &spec.room;
    let o = &spec.options;
    let matrix = |rows: Vec<&Vec<f64>>| {
        let rows: Vec<String> = rows
            .iter()
            .map(|r| r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" "))
            .collect();
        format!("[{}]", rows.join("; "))
    };
    let _ = writeln!(out, "room.dimension = {}", fmt_vec3(room.dimensions));
    let _ = writeln!(out, "room.temperature = {:?}", room.temperature);
    let _ = writeln!(out, "room.humidity = {:?}", room.humidity);
    let _ = writeln!(out, "room.pressure = {:?}", room.pressure);
    let _ = writeln!(out, "room.surface.absorption = {}", matrix(room.surfaces.iter().map(|s| &s.absorption).collect()));
    let _ = writeln!(out, "room.surface.scattering = {}", matrix(room.surfaces.iter().map(|s| &s.scattering).collect()));
    let _ = writeln!(out, "options.fs = {}", o.fs);
    let _ = writeln!(out, "options.duration = {:?}", o.ir_duration);
    let _ = writeln!(out, "options.bandcenters = {}", fmt_list(&o.band_centers));
    let _ = writeln!(out, "options.ism = {}", o.ism_enabled);
    let _ = writeln!(out, "options.ismorder = {}", o.ism_max_order);
    let _ = writeln!(out, "options.diffuse = {}", o.diffuse_enabled);
    let _ = writeln!(out, "options.rays = {}", o.n_rays);
    let _ = writeln!(out, "options.detectionradius = {:?}", o.detection_radius);
    let _ = writeln!(out, "options.threshold = {:?}", o.energy_threshold);
    let _ = writeln!(out, "options.seed = {}", o.seed);
    for (i, s) in spec.sources.iter().enumerate() {
        let n = i + 1;
        let or = s.orientation;
        let _ = writeln!(out, "source({n}).location = {}", fmt_vec3(s.position));
        let _ = writeln!(out, "source({n}).orientation = {}", fmt_list(&[or.yaw, or.pitch, or.roll]));
        let _ = writeln!(out, "source({n}).description = {}", s.directivity.name());
    }
    for (i, r) in spec.receivers.iter().enumerate() {
        let n = i + 1;
        let or = r.orientation;
        let _ = writeln!(out, "receiver({n}).location = {}", fmt_vec3(r.position));
        let _ = writeln!(out, "receiver({n}).orientation = {}", fmt_list(&[or.yaw, or.pitch, or.roll]));
        let desc = match &r.kind {
            ReceiverKind::Omnidirectional => "omnidirectional".to_string(),
            ReceiverKind::Hrtf {
                path,
                interpolation,
                normalize,
            } => {
                let mode = match interpolation {
                    InterpolationMode::Nearest => "nearest",
                    InterpolationMode::Interpolate => "interpolate",
                };
                format!("SOFA {} {mode} {normalize}", quote(path))
            }
        };
        let _ = writeln!(out, "receiver({n}).description = {desc}");
    }
    let _ = writeln!(out, "output.path = {}", quote(&spec.output.path));
    let _ = writeln!(out, "output.format = {}", spec.output.format.name());
    out
}
