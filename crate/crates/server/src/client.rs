//! Minimal blocking NDJSON client, used by the examples and tests.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use crate::protocol::{
    decode_server, encode_client, ClientBody, Envelope, Role, ServerBody, StateSnapshot, SCHEMA_VERSION,
};

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    seq: u64,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(Duration::from_secs(10)))?;
        let writer = BufWriter::new(stream.try_clone()?);
        Ok(Self { reader: BufReader::new(stream), writer, seq: 0 })
    }

    /// Connects and completes the hello exchange.
    pub fn connect_as(addr: SocketAddr, role: Role) -> io::Result<(Self, ServerBody)> {
        let mut c = Self::connect(addr)?;
        let reply = c.request(ClientBody::Hello { schema_version: SCHEMA_VERSION, role })?;
        Ok((c, reply))
    }

    pub fn set_read_timeout(&self, t: Option<Duration>) -> io::Result<()> {
        self.reader.get_ref().set_read_timeout(t)
    }

    /// Sends with the next sequence number and returns that number.
    pub fn send(&mut self, body: ClientBody) -> io::Result<u64> {
        self.seq += 1;
        self.send_raw(&encode_client(self.seq, &body))?;
        Ok(self.seq)
    }

    /// Writes one line as-is.
    pub fn send_raw(&mut self, line: &str) -> io::Result<()> {
        writeln!(self.writer, "{line}")?;
        self.writer.flush()
    }

    /// Next message of any kind.
    pub fn recv(&mut self) -> io::Result<Envelope<ServerBody>> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "server closed the connection"));
        }
        decode_server(line.trim_end()).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.message))
    }

    /// Next message that is not a state snapshot.
    pub fn recv_reply(&mut self) -> io::Result<ServerBody> {
        loop {
            match self.recv()?.body {
                ServerBody::State(_) => {}
                other => return Ok(other),
            }
        }
    }

    /// Next state snapshot, skipping anything else.
    pub fn recv_state(&mut self) -> io::Result<StateSnapshot> {
        loop {
            if let ServerBody::State(s) = self.recv()?.body {
                return Ok(s);
            }
        }
    }

    /// Sends and waits for the reply.
    pub fn request(&mut self, body: ClientBody) -> io::Result<ServerBody> {
        self.send(body)?;
        self.recv_reply()
    }
}
