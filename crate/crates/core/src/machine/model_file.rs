//! Little-endian binary model files.
//!
//! Single machine: `TSTM`, version `u16`, `o u32`, `m u32`, `T u32`, `s f64`,
//! `bits u8`, `boost u8`, then `m * 2o` states as `u16` in interleaved order.
//! Multi-class: `TSMC`, version `u16`, `n u32`, then `n` single-machine records.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::multiclass::MultiClassMachine;

use super::{MachineConfig, TsetlinMachine};

const MAGIC: &[u8; 4] = b"TSTM";
const MAGIC_MC: &[u8; 4] = b"TSMC";
const VERSION: u16 = 1;

pub fn write_machine<W: Write>(tm: &TsetlinMachine, out: &mut W) -> Result<()> {
    let c = tm.config();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(c.inputs as u32).to_le_bytes())?;
    out.write_all(&(c.clauses as u32).to_le_bytes())?;
    out.write_all(&c.threshold.to_le_bytes())?;
    out.write_all(&c.s.to_le_bytes())?;
    out.write_all(&[c.state_bits, u8::from(c.boost)])?;
    let mut buf = Vec::with_capacity(c.clauses * c.inputs * 4);
    for clause in tm.states() {
        for v in clause {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

fn take<const K: usize, R: Read>(input: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    input.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::ModelFormat("file is truncated".into()),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

fn header<R: Read>(input: &mut R, magic: &[u8; 4]) -> Result<()> {
    let m: [u8; 4] = take(input)?;
    if &m != magic {
        return Err(Error::ModelFormat(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&m),
            String::from_utf8_lossy(magic)
        )));
    }
    let v = u16::from_le_bytes(take(input)?);
    if v != VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {v}")));
    }
    Ok(())
}

/// Reads a single machine. The training schedule (epochs, seed) is not
/// stored and comes back as zero.
pub fn read_machine<R: Read>(input: &mut R) -> Result<TsetlinMachine> {
    header(input, MAGIC)?;
    let inputs = u32::from_le_bytes(take(input)?) as usize;
    let clauses = u32::from_le_bytes(take(input)?) as usize;
    let threshold = u32::from_le_bytes(take(input)?);
    let s = f64::from_le_bytes(take(input)?);
    let [state_bits, boost] = take::<2, _>(input)?;
    if boost > 1 {
        return Err(Error::ModelFormat(format!("boost flag must be 0 or 1, got {boost}")));
    }
    let config = MachineConfig {
        inputs,
        clauses,
        threshold,
        s,
        state_bits,
        boost: boost == 1,
        epochs: 0,
        seed: 0,
    };
    config
        .validate()
        .map_err(|e| Error::ModelFormat(format!("bad header: {e}")))?;
    let mut states = Vec::with_capacity(clauses);
    for _ in 0..clauses {
        let mut clause = Vec::with_capacity(2 * inputs);
        for _ in 0..2 * inputs {
            clause.push(u16::from_le_bytes(take(input)?));
        }
        states.push(clause);
    }
    TsetlinMachine::from_states(config, &states).map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn write_multiclass<W: Write>(mc: &MultiClassMachine, out: &mut W) -> Result<()> {
    out.write_all(MAGIC_MC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(mc.n_classes() as u32).to_le_bytes())?;
    for bank in mc.banks() {
        write_machine(bank, out)?;
    }
    Ok(())
}

pub fn read_multiclass<R: Read>(input: &mut R) -> Result<MultiClassMachine> {
    header(input, MAGIC_MC)?;
    let n = u32::from_le_bytes(take(input)?) as usize;
    let banks = (0..n).map(|_| read_machine(input)).collect::<Result<Vec<_>>>()?;
    MultiClassMachine::from_banks(banks).map_err(|e| Error::ModelFormat(e.to_string()))
}
