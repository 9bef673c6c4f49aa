//! Event data model and the two on-disk interchange formats.
//!
//! Text: one `t,x,y,p` record per line (microseconds, pixel column, pixel
//! row, polarity 0/1). Lines starting with `#` and blank lines are skipped.
//!
//! Binary: the magic `EVT1`, then sensor width and height as little-endian
//! `u16`, then 13-byte little-endian records `t: u64, x: u16, y: u16, p: u8`.

use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"EVT1";
pub const BINARY_HEADER_LEN: usize = 8;
pub const BINARY_RECORD_LEN: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Off),
            1 => Some(Polarity::On),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }
}

/// One change event. `t` is in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Event { t, x, y, polarity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorGeometry {
    pub width: u16,
    pub height: u16,
}

impl SensorGeometry {
    pub fn new(width: u16, height: u16) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Contract(format!(
                "sensor geometry must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(SensorGeometry { width, height })
    }

    pub fn w(&self) -> f64 {
        f64::from(self.width)
    }

    pub fn h(&self) -> f64 {
        f64::from(self.height)
    }

    pub fn pixel_count(&self) -> usize {
        usize::from(self.width) * usize::from(self.height)
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }
}

impl Default for SensorGeometry {
    /// DAVIS240 resolution.
    fn default() -> Self {
        SensorGeometry {
            width: 240,
            height: 180,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Binary,
}

impl Format {
    /// Binary files are recognised by their magic; anything else is text.
    pub fn detect(bytes: &[u8]) -> Format {
        if bytes.starts_with(BINARY_MAGIC) {
            Format::Binary
        } else {
            Format::Text
        }
    }
}

/// Immutable, time-ordered event sequence tied to a sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    geometry: SensorGeometry,
}

impl EventStream {
    /// Validates coordinates and sorts by timestamp (stable).
    pub fn new(mut events: Vec<Event>, geometry: SensorGeometry) -> Result<Self> {
        for (index, e) in events.iter().enumerate() {
            if !geometry.contains(e.x, e.y) {
                return Err(Error::Validation {
                    index,
                    message: format!(
                        "coordinate ({}, {}) outside {}x{} sensor",
                        e.x, e.y, geometry.width, geometry.height
                    ),
                });
            }
        }
        if !events.windows(2).all(|p| p[0].t <= p[1].t) {
            events.sort_by_key(|e| e.t);
        }
        Ok(EventStream { events, geometry })
    }

    pub fn empty(geometry: SensorGeometry) -> Self {
        EventStream {
            events: Vec::new(),
            geometry,
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn time_extent(&self) -> TimeExtent {
        time_extent(self)
    }

    /// Concatenates two streams over the same sensor, keeping time order.
    pub fn merge(&self, other: &EventStream) -> Result<EventStream> {
        if self.geometry != other.geometry {
            return Err(Error::Contract(
                "cannot merge streams from different sensors".into(),
            ));
        }
        let mut events = Vec::with_capacity(self.len() + other.len());
        events.extend_from_slice(&self.events);
        events.extend_from_slice(&other.events);
        EventStream::new(events, self.geometry)
    }
}

/// Reference time and span of a stream. `delta` is in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeExtent {
    pub t_ref: u64,
    pub delta: f64,
}

pub fn time_extent(stream: &EventStream) -> TimeExtent {
    match (stream.events.first(), stream.events.last()) {
        (Some(first), Some(last)) => TimeExtent {
            t_ref: first.t,
            delta: (last.t - first.t) as f64 * 1e-6,
        },
        _ => TimeExtent {
            t_ref: 0,
            delta: 0.0,
        },
    }
}

pub fn parse_events(bytes: &[u8], format: Format, geometry: SensorGeometry) -> Result<EventStream> {
    match format {
        Format::Text => parse_text(bytes, geometry),
        Format::Binary => {
            let (header_geometry, events) = decode_binary(bytes)?;
            if header_geometry != geometry {
                return Err(Error::Contract(format!(
                    "binary header declares a {}x{} sensor, expected {}x{}",
                    header_geometry.width, header_geometry.height, geometry.width, geometry.height
                )));
            }
            EventStream::new(events, geometry)
        }
    }
}

/// Parses a binary stream using the geometry stored in its header.
pub fn parse_binary(bytes: &[u8]) -> Result<EventStream> {
    let (geometry, events) = decode_binary(bytes)?;
    EventStream::new(events, geometry)
}

fn parse_text(bytes: &[u8], geometry: SensorGeometry) -> Result<EventStream> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        location: format!("byte {}", e.valid_up_to()),
        message: "input is not valid UTF-8".into(),
    })?;
    let mut events = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse {
            location: format!("line {}", line_no + 1),
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", fields.len())));
        }
        let t: u64 = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad timestamp {:?}", fields[0])))?;
        let x: u16 = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad x coordinate {:?}", fields[1])))?;
        let y: u16 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad y coordinate {:?}", fields[2])))?;
        let polarity = fields[3]
            .parse::<u8>()
            .ok()
            .and_then(Polarity::from_bit)
            .ok_or_else(|| bad(format!("bad polarity {:?}", fields[3])))?;
        events.push(Event::new(t, x, y, polarity));
    }
    EventStream::new(events, geometry)
}

fn decode_binary(bytes: &[u8]) -> Result<(SensorGeometry, Vec<Event>)> {
    if bytes.len() < BINARY_HEADER_LEN || &bytes[..4] != BINARY_MAGIC {
        return Err(Error::Parse {
            location: "offset 0".into(),
            message: "missing EVT1 header".into(),
        });
    }
    let width = u16::from_le_bytes([bytes[4], bytes[5]]);
    let height = u16::from_le_bytes([bytes[6], bytes[7]]);
    let geometry = SensorGeometry::new(width, height).map_err(|_| Error::Parse {
        location: "offset 4".into(),
        message: format!("invalid sensor size {width}x{height}"),
    })?;
    let body = &bytes[BINARY_HEADER_LEN..];
    if !body.len().is_multiple_of(BINARY_RECORD_LEN) {
        let offset = BINARY_HEADER_LEN + body.len() - body.len() % BINARY_RECORD_LEN;
        return Err(Error::Parse {
            location: format!("offset {offset}"),
            message: "truncated record".into(),
        });
    }
    let mut events = Vec::with_capacity(body.len() / BINARY_RECORD_LEN);
    for (i, rec) in body.chunks_exact(BINARY_RECORD_LEN).enumerate() {
        let t = u64::from_le_bytes(rec[0..8].try_into().expect("8-byte slice"));
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let polarity = Polarity::from_bit(rec[12]).ok_or_else(|| Error::Parse {
            location: format!("offset {}", BINARY_HEADER_LEN + i * BINARY_RECORD_LEN + 12),
            message: format!("bad polarity byte {}", rec[12]),
        })?;
        events.push(Event::new(t, x, y, polarity));
    }
    Ok((geometry, events))
}

pub fn serialize_events(stream: &EventStream, format: Format) -> Vec<u8> {
    match format {
        Format::Text => {
            let mut out = String::with_capacity(stream.len() * 16);
            for e in stream.events() {
                out.push_str(&format!("{},{},{},{}\n", e.t, e.x, e.y, e.polarity.bit()));
            }
            out.into_bytes()
        }
        Format::Binary => {
            let mut out = Vec::with_capacity(BINARY_HEADER_LEN + stream.len() * BINARY_RECORD_LEN);
            out.extend_from_slice(BINARY_MAGIC);
            out.extend_from_slice(&stream.geometry.width.to_le_bytes());
            out.extend_from_slice(&stream.geometry.height.to_le_bytes());
            for e in stream.events() {
                out.extend_from_slice(&e.t.to_le_bytes());
                out.extend_from_slice(&e.x.to_le_bytes());
                out.extend_from_slice(&e.y.to_le_bytes());
                out.push(e.polarity.bit());
            }
            out
        }
    }
}
