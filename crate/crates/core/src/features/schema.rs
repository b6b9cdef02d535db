//! Column layouts of the two datasets and their CSV representation.

use std::io::{BufWriter, Read, Write};
use std::net::Ipv4Addr;
use std::path::Path;

use crate::error::{Error, Result};
use crate::simcore::{NodeId, PacketType, TraceRecord};

use super::flows::FlowKey;
use super::label::Label;

/// Which dataset layout a table follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SchemaKind {
    /// Every event of every node, with aggregated vector statistics.
    FullSurveillance,
    /// Packets seen by one satellite, with flow statistics.
    Vantage,
}

pub const IDENTITY_COLUMNS_FULL: [&str; 8] = [
    "sendTime", "sender", "reciever", "IP_src", "port_src", "IP_dest", "port_dest", "Frequency",
];

pub const IDENTITY_COLUMNS_VANTAGE: [&str; 7] =
    ["sendTime", "sender", "reciever", "IP_src", "port_src", "IP_dest", "port_dest"];

pub const FEATURES_FULL: [&str; 19] = [
    "Next_Current_diff",
    "Next_Pre_diff",
    "SNext_Current_diff",
    "SNext_Pre_diff",
    "size",
    "channel",
    "duration",
    "packet_type",
    "rcvdPK",
    "sentPK",
    "droppedPKWrongPort",
    "DataQueueLen",
    "passedUpPk",
    "rcvdPKFromHL",
    "rcvdPKFromLL",
    "sentDownPK",
    "DropPKByQueue",
    "snir",
    "throughput",
];

pub const FEATURES_VANTAGE: [&str; 14] = [
    "Next_Current_diff",
    "Next_Pre_diff",
    "SNext_Current_diff",
    "SNext_Pre_diff",
    "size",
    "channel",
    "packet_type",
    "snir",
    "throughput",
    "FlowBytes_s",
    "FlowPackets_s",
    "meanT_b_2P",
    "maxT_b_2P",
    "minT_b_2P",
];

pub const LABEL_COLUMN: &str = "label";

impl SchemaKind {
    pub fn number(self) -> u8 {
        match self {
            SchemaKind::FullSurveillance => 1,
            SchemaKind::Vantage => 2,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(SchemaKind::FullSurveillance),
            2 => Ok(SchemaKind::Vantage),
            other => Err(Error::config("schema", format!("unknown schema {other} (expected 1 or 2)"))),
        }
    }

    pub fn identity_columns(self) -> &'static [&'static str] {
        match self {
            SchemaKind::FullSurveillance => &IDENTITY_COLUMNS_FULL,
            SchemaKind::Vantage => &IDENTITY_COLUMNS_VANTAGE,
        }
    }

    pub fn feature_columns(self) -> &'static [&'static str] {
        match self {
            SchemaKind::FullSurveillance => &FEATURES_FULL,
            SchemaKind::Vantage => &FEATURES_VANTAGE,
        }
    }

    pub fn num_features(self) -> usize {
        self.feature_columns().len()
    }

    pub fn header(self) -> String {
        let mut cols: Vec<&str> = self.identity_columns().to_vec();
        cols.extend_from_slice(self.feature_columns());
        cols.push(LABEL_COLUMN);
        cols.join(",")
    }
}

/// Non-feature columns that identify the packet a row describes.
#[derive(Debug, Clone, PartialEq)]
pub struct RowIdentity {
    pub send_time: f64,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub ip_src: Ipv4Addr,
    pub port_src: u16,
    pub ip_dst: Ipv4Addr,
    pub port_dst: u16,
    /// Only present in the full-surveillance layout.
    pub frequency: Option<f64>,
    /// Not a CSV column; kept so flows can be rebuilt from rows.
    pub packet_type: PacketType,
}

impl RowIdentity {
    pub fn from_record(r: &TraceRecord, schema: SchemaKind) -> Self {
        RowIdentity {
            send_time: r.time,
            sender: r.sender,
            receiver: r.receiver,
            ip_src: r.ip_src,
            port_src: r.port_src,
            ip_dst: r.ip_dst,
            port_dst: r.port_dst,
            frequency: (schema == SchemaKind::FullSurveillance).then_some(r.frequency),
            packet_type: r.packet_type,
        }
    }

    pub fn flow_key(&self) -> FlowKey {
        FlowKey {
            ip_src: self.ip_src,
            port_src: self.port_src,
            ip_dst: self.ip_dst,
            port_dst: self.port_dst,
            packet_type: self.packet_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub identity: RowIdentity,
    pub features: Vec<f64>,
    pub label: Label,
}

/// A labeled table in one of the two layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: SchemaKind,
    pub rows: Vec<FeatureRow>,
}

impl Dataset {
    pub fn new(schema: SchemaKind, rows: Vec<FeatureRow>) -> Result<Self> {
        let ds = Dataset { schema, rows };
        ds.check_widths()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_columns(&self) -> &'static [&'static str] {
        self.schema.feature_columns()
    }

    fn check_widths(&self) -> Result<()> {
        let want = self.schema.num_features();
        for (i, row) in self.rows.iter().enumerate() {
            if row.features.len() != want {
                return Err(Error::dimension(format!("dataset row {i}"), want, row.features.len()));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.check_widths()?;
        let mut w = BufWriter::new(writer);
        writeln!(w, "{}", self.schema.header())?;
        for row in &self.rows {
            let id = &row.identity;
            write!(
                w,
                "{},{},{},{},{},{},{}",
                id.send_time, id.sender, id.receiver, id.ip_src, id.port_src, id.ip_dst, id.port_dst
            )?;
            if self.schema == SchemaKind::FullSurveillance {
                write!(w, ",{}", id.frequency.unwrap_or(0.0))?;
            }
            for v in &row.features {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", row.label)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a dataset CSV; the layout is recognised from the header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
        let schema = [SchemaKind::FullSurveillance, SchemaKind::Vantage]
            .into_iter()
            .find(|s| s.header() == header)
            .ok_or_else(|| Error::Schema(format!("unrecognised dataset header `{header}`")))?;
        let n_id = schema.identity_columns().len();
        let n_feat = schema.num_features();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let field = |j: usize| rec.get(j).unwrap_or("");
            let bad = |j: usize| {
                Error::Data(format!("dataset line {line}: bad value `{}` in column {}", field(j), j + 1))
            };
            let num = |j: usize| field(j).parse::<f64>().map_err(|_| bad(j));
            let ip = |j: usize| field(j).parse::<Ipv4Addr>().map_err(|_| bad(j));
            let port = |j: usize| field(j).parse::<u16>().map_err(|_| bad(j));
            let node = |j: usize| field(j).parse::<NodeId>().map_err(|_| bad(j));
            let mut features = Vec::with_capacity(n_feat);
            for j in n_id..n_id + n_feat {
                features.push(num(j)?);
            }
            let type_col = schema
                .feature_columns()
                .iter()
                .position(|c| *c == "packet_type")
                .expect("both layouts carry packet_type");
            let packet_type = if features[type_col] >= 0.5 { PacketType::Icmp } else { PacketType::Udp };
            let identity = RowIdentity {
                send_time: num(0)?,
                sender: node(1)?,
                receiver: node(2)?,
                ip_src: ip(3)?,
                port_src: port(4)?,
                ip_dst: ip(5)?,
                port_dst: port(6)?,
                frequency: if schema == SchemaKind::FullSurveillance { Some(num(7)?) } else { None },
                packet_type,
            };
            let label: Label = field(n_id + n_feat).parse()?;
            rows.push(FeatureRow { identity, features, label });
        }
        Dataset::new(schema, rows)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Concatenates feature vectors and the matching class indices.
    pub fn xy(&self, classes: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let x = self.rows.iter().map(|r| r.features.clone()).collect();
        let y = self
            .rows
            .iter()
            .map(|r| r.label.class_index(classes))
            .collect::<Result<_>>()?;
        Ok((x, y))
    }

    pub fn label_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for r in &self.rows {
            counts[r.label.index()] += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_follow_the_table_order() {
        assert_eq!(
            SchemaKind::FullSurveillance.header(),
            "sendTime,sender,reciever,IP_src,port_src,IP_dest,port_dest,Frequency,\
             Next_Current_diff,Next_Pre_diff,SNext_Current_diff,SNext_Pre_diff,size,channel,duration,\
             packet_type,rcvdPK,sentPK,droppedPKWrongPort,DataQueueLen,passedUpPk,rcvdPKFromHL,\
             rcvdPKFromLL,sentDownPK,DropPKByQueue,snir,throughput,label"
        );
        assert_eq!(
            SchemaKind::Vantage.header(),
            "sendTime,sender,reciever,IP_src,port_src,IP_dest,port_dest,\
             Next_Current_diff,Next_Pre_diff,SNext_Current_diff,SNext_Pre_diff,size,channel,\
             packet_type,snir,throughput,FlowBytes_s,FlowPackets_s,meanT_b_2P,maxT_b_2P,minT_b_2P,label"
        );
    }

    fn row(schema: SchemaKind, v: f64) -> FeatureRow {
        let mut features = vec![v; schema.num_features()];
        let t = schema.feature_columns().iter().position(|c| *c == "packet_type").unwrap();
        features[t] = 1.0;
        FeatureRow {
            identity: RowIdentity {
                send_time: 0.125,
                sender: NodeId::end_user(3),
                receiver: crate::simcore::SAT_ZONE1,
                ip_src: Ipv4Addr::new(10, 1, 0, 4),
                port_src: 5555,
                ip_dst: Ipv4Addr::new(10, 2, 0, 1),
                port_dst: 2000,
                frequency: (schema == SchemaKind::FullSurveillance).then_some(1616e6),
                packet_type: PacketType::Icmp,
            },
            features,
            label: Label::Rain,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        for schema in [SchemaKind::FullSurveillance, SchemaKind::Vantage] {
            let ds = Dataset::new(schema, vec![row(schema, 0.1 + 0.2), row(schema, 1.0 / 3.0)]).unwrap();
            let mut buf = Vec::new();
            ds.write_csv(&mut buf).unwrap();
            assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), ds);
        }
    }

    #[test]
    fn wrong_width_is_a_dimension_error() {
        let mut r = row(SchemaKind::Vantage, 0.5);
        r.features.pop();
        match Dataset::new(SchemaKind::Vantage, vec![r]) {
            Err(Error::Dimension { expected, found, .. }) => assert_eq!((expected.as_str(), found.as_str()), ("14", "13")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_header_is_a_schema_error() {
        assert!(matches!(Dataset::read_csv("a,b,label\n".as_bytes()), Err(Error::Schema(_))));
    }
}
