//! Packet transmission records, per-node statistic samples, and their CSV forms.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::net::Ipv4Addr;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::node::NodeId;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "time,packet_id,sender,receiver,ip_src,port_src,ip_dst,port_dst,channel,frequency,size,packet_type,hop_index,outcome,snir,duration";
pub const VECTOR_HEADER: &str = "node,stat,time,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PacketType {
    Udp,
    Icmp,
}

impl PacketType {
    /// Numeric encoding used as a feature value.
    pub fn code(self) -> f64 {
        match self {
            PacketType::Udp => 0.0,
            PacketType::Icmp => 1.0,
        }
    }
}

impl fmt::Display for PacketType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PacketType::Udp => "UDP",
            PacketType::Icmp => "ICMP",
        })
    }
}

impl FromStr for PacketType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "UDP" => Ok(PacketType::Udp),
            "ICMP" => Ok(PacketType::Icmp),
            _ => Err(Error::Data(format!("unknown packet type `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Delivered,
    /// Reception failed the SNIR threshold.
    DroppedSnir,
    /// Reached its destination but no application listens on the port.
    DroppedWrongPort,
    /// Discarded by a full interface queue before transmission.
    DroppedQueue,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Delivered => "Delivered",
            Outcome::DroppedSnir => "DroppedSnir",
            Outcome::DroppedWrongPort => "DroppedWrongPort",
            Outcome::DroppedQueue => "DroppedQueue",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Delivered" => Ok(Outcome::Delivered),
            "DroppedSnir" => Ok(Outcome::DroppedSnir),
            "DroppedWrongPort" => Ok(Outcome::DroppedWrongPort),
            "DroppedQueue" => Ok(Outcome::DroppedQueue),
            _ => Err(Error::Data(format!("unknown outcome `{s}`"))),
        }
    }
}

/// One hop of one packet: a transmission attempt, or a queue drop.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Transmission start (or drop) time in seconds.
    pub time: f64,
    pub packet_id: u64,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub ip_src: Ipv4Addr,
    pub port_src: u16,
    pub ip_dst: Ipv4Addr,
    pub port_dst: u16,
    pub channel: u16,
    pub frequency: f64,
    /// Bytes.
    pub size: u32,
    pub packet_type: PacketType,
    pub hop_index: u16,
    pub outcome: Outcome,
    pub snir: f64,
    /// Airtime in seconds; 0 for queue drops.
    pub duration: f64,
}

impl TraceRecord {
    pub fn write_csv_line<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "{:.6},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.time,
            self.packet_id,
            self.sender,
            self.receiver,
            self.ip_src,
            self.port_src,
            self.ip_dst,
            self.port_dst,
            self.channel,
            self.frequency,
            self.size,
            self.packet_type,
            self.hop_index,
            self.outcome,
            self.snir,
            self.duration
        )
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 16 {
            return Err(Error::Data(format!(
                "trace line has {} fields, expected 16",
                fields.len()
            )));
        }
        fn num<T: FromStr>(name: &str, v: &str) -> Result<T> {
            v.parse::<T>()
                .map_err(|_| Error::Data(format!("bad {name} `{v}`")))
        }
        let record = TraceRecord {
            time: num("time", fields[0])?,
            packet_id: num("packet_id", fields[1])?,
            sender: fields[2].parse()?,
            receiver: fields[3].parse()?,
            ip_src: num("ip_src", fields[4])?,
            port_src: num("port_src", fields[5])?,
            ip_dst: num("ip_dst", fields[6])?,
            port_dst: num("port_dst", fields[7])?,
            channel: num("channel", fields[8])?,
            frequency: num("frequency", fields[9])?,
            size: num("size", fields[10])?,
            packet_type: fields[11].parse()?,
            hop_index: num("hop_index", fields[12])?,
            outcome: fields[13].parse()?,
            snir: num("snir", fields[14])?,
            duration: num("duration", fields[15])?,
        };
        if !(record.time.is_finite() && record.time >= 0.0) {
            return Err(Error::Data(format!("bad time `{}`", fields[0])));
        }
        if record.size == 0 {
            return Err(Error::Data("zero packet size".into()));
        }
        if !(record.snir.is_finite() && record.snir >= 0.0) {
            return Err(Error::Data(format!("bad snir `{}`", fields[14])));
        }
        Ok(record)
    }
}

/// Per-node statistics recorded on a fixed cadence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stat {
    RcvdPk,
    SentPk,
    DroppedPkWrongPort,
    DataQueueLen,
    PassedUpPk,
    RcvdPkFromHl,
    RcvdPkFromLl,
    SentDownPk,
    DropPkByQueue,
    Snir,
    Throughput,
}

impl Stat {
    pub const ALL: [Stat; 11] = [
        Stat::RcvdPk,
        Stat::SentPk,
        Stat::DroppedPkWrongPort,
        Stat::DataQueueLen,
        Stat::PassedUpPk,
        Stat::RcvdPkFromHl,
        Stat::RcvdPkFromLl,
        Stat::SentDownPk,
        Stat::DropPkByQueue,
        Stat::Snir,
        Stat::Throughput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stat::RcvdPk => "rcvdPK",
            Stat::SentPk => "sentPK",
            Stat::DroppedPkWrongPort => "droppedPKWrongPort",
            Stat::DataQueueLen => "DataQueueLen",
            Stat::PassedUpPk => "passedUpPk",
            Stat::RcvdPkFromHl => "rcvdPKFromHL",
            Stat::RcvdPkFromLl => "rcvdPKFromLL",
            Stat::SentDownPk => "sentDownPK",
            Stat::DropPkByQueue => "DropPKByQueue",
            Stat::Snir => "snir",
            Stat::Throughput => "throughput",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Counters are emitted as per-interval deltas; the rest are instantaneous.
    pub fn is_counter(self) -> bool {
        !matches!(self, Stat::DataQueueLen | Stat::Snir | Stat::Throughput)
    }
}

impl FromStr for Stat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stat::ALL
            .into_iter()
            .find(|stat| stat.name() == s)
            .ok_or_else(|| Error::Data(format!("unknown statistic `{s}`")))
    }
}

impl fmt::Display for Stat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorSample {
    pub node: NodeId,
    pub stat: Stat,
    pub time: f64,
    pub value: f64,
}

pub fn write_trace<W: Write>(writer: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{TRACE_HEADER}")?;
    for r in records {
        r.write_csv_line(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, records: &[TraceRecord]) -> Result<()> {
    write_trace(std::fs::File::create(path)?, records)
}

/// Strict reader: any malformed line is an error.
pub fn read_trace<R: Read>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != TRACE_HEADER {
        return Err(Error::Schema("trace file header does not match".into()));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            TraceRecord::parse_csv_line(&line)
                .map_err(|e| Error::Data(format!("trace line {}: {e}", i + 2)))?,
        );
    }
    Ok(out)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>> {
    read_trace(std::fs::File::open(path)?)
}

pub fn write_vectors<W: Write>(writer: W, samples: &[VectorSample]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{VECTOR_HEADER}")?;
    for s in samples {
        writeln!(w, "{},{},{:.6},{}", s.node, s.stat, s.time, s.value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vectors_file(path: &Path, samples: &[VectorSample]) -> Result<()> {
    write_vectors(std::fs::File::create(path)?, samples)
}

pub fn read_vectors<R: Read>(reader: R) -> Result<Vec<VectorSample>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != VECTOR_HEADER {
        return Err(Error::Schema(format!("vector file header `{header}` does not match")));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let parse = |i: usize, name: &str| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| Error::Data(format!("bad vector {name} `{}`", field(i))))
        };
        out.push(VectorSample {
            node: field(0).parse()?,
            stat: field(1).parse()?,
            time: parse(2, "time")?,
            value: parse(3, "value")?,
        });
    }
    Ok(out)
}

pub fn read_vectors_file(path: &Path) -> Result<Vec<VectorSample>> {
    read_vectors(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> TraceRecord {
        TraceRecord {
            time: 1.25,
            packet_id: 7,
            sender: NodeId::end_user(2),
            receiver: NodeId::satellite(0),
            ip_src: Ipv4Addr::new(10, 1, 0, 3),
            port_src: 5555,
            ip_dst: Ipv4Addr::new(10, 2, 0, 16),
            port_dst: 2000,
            channel: 2,
            frequency: 1616e6,
            size: 300,
            packet_type: PacketType::Udp,
            hop_index: 0,
            outcome: Outcome::Delivered,
            snir: 12345.5,
            duration: 0.0024,
        }
    }

    #[test]
    fn trace_line_format() {
        let mut buf = Vec::new();
        record().write_csv_line(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "1.250000,7,EndUser[2],Satellite[0],10.1.0.3,5555,10.2.0.16,2000,2,1616000000,300,UDP,0,Delivered,12345.5,0.0024\n"
        );
    }

    #[test]
    fn trace_file_round_trip() {
        let records = vec![record(), TraceRecord { time: 2.0, hop_index: 1, ..record() }];
        let mut buf = Vec::new();
        write_trace(&mut buf, &records).unwrap();
        assert!(buf.starts_with(TRACE_HEADER.as_bytes()));
        assert_eq!(read_trace(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(TraceRecord::parse_csv_line("1.0,2,3").is_err());
        let mut line = Vec::new();
        TraceRecord { size: 0, ..record() }.write_csv_line(&mut line).unwrap();
        assert!(TraceRecord::parse_csv_line(std::str::from_utf8(&line).unwrap()).is_err());
        assert!(read_trace("bogus\n".as_bytes()).is_err());
    }

    #[test]
    fn vectors_round_trip() {
        let samples = vec![
            VectorSample { node: NodeId::satellite(1), stat: Stat::Snir, time: 0.1, value: 55.5 },
            VectorSample { node: NodeId::end_user(0), stat: Stat::DropPkByQueue, time: 0.2, value: 3.0 },
        ];
        let mut buf = Vec::new();
        write_vectors(&mut buf, &samples).unwrap();
        assert_eq!(read_vectors(buf.as_slice()).unwrap(), samples);
    }

    #[test]
    fn stat_names_parse() {
        for stat in Stat::ALL {
            assert_eq!(stat.name().parse::<Stat>().unwrap(), stat);
        }
        assert!(!Stat::Snir.is_counter());
        assert!(Stat::SentPk.is_counter());
    }
}
