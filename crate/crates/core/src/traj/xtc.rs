//! XTC trajectories: big-endian XDR frames with 3dfcoord-compressed positions.
//!
//! Frame layout: magic, atom count, step, time, nine box floats, then the
//! coordinate block. Blocks of nine atoms or fewer are plain floats. Larger
//! blocks hold the precision, integer bounds, the initial small-delta index,
//! and a bit stream of quantized coordinates where runs of close atoms are
//! coded as small deltas from their predecessor.

use std::io::{ErrorKind, Read};

use super::{Frame, TrajError, Trajectory};
use crate::structure::Vec3;

pub const XTC_MAGIC: i32 = 1995;

const FIRSTIDX: usize = 9;
const LASTIDX: usize = MAGICINTS.len();
const MAGICINTS: [i64; 73] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 8, 10, 12, 16, 20, 25, 32, 40, 50, 64, 80, 101, 128, 161, 203, 256, 322, 406,
    512, 645, 812, 1024, 1290, 1625, 2048, 2580, 3250, 4096, 5060, 6501, 8192, 10321, 13003, 16384, 20642,
    26007, 32768, 41285, 52015, 65536, 82570, 104031, 131072, 165140, 208063, 262144, 330280, 416127, 524287,
    660561, 832255, 1048576, 1321122, 1664510, 2097152, 2642245, 3329021, 4194304, 5284491, 6658042, 8388607,
    10568983, 13316085, 16777216,
];
const MAXABS: f64 = (i32::MAX - 2) as f64;
/// Atom counts up to this are stored as plain floats.
const UNCOMPRESSED_MAX: usize = 9;
/// Longest run of small-delta atoms, in coordinates.
const MAX_RUN: i64 = 8 * 3;

struct BitWriter {
    bytes: Vec<u8>,
    current: u8,
    filled: u32,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter { bytes: Vec::new(), current: 0, filled: 0 }
    }

    /// Appends the low `nbits` of `value`, most significant bit first.
    fn write(&mut self, nbits: u32, value: u128) {
        for i in (0..nbits).rev() {
            self.current = (self.current << 1) | ((value >> i) & 1) as u8;
            self.filled += 1;
            if self.filled == 8 {
                self.bytes.push(self.current);
                self.current = 0;
                self.filled = 0;
            }
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.bytes.push(self.current << (8 - self.filled));
        }
        self.bytes
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    bit: usize,
}

impl BitReader<'_> {
    fn read(&mut self, nbits: u32) -> Option<u128> {
        let end = self.bit.checked_add(nbits as usize)?;
        if end > self.data.len() * 8 {
            return None;
        }
        let mut v: u128 = 0;
        for b in self.bit..end {
            v = (v << 1) | u128::from((self.data[b / 8] >> (7 - b % 8)) & 1);
        }
        self.bit = end;
        Some(v)
    }
}

fn bit_length(v: u128) -> u32 {
    128 - v.leading_zeros()
}

fn sizeofints(sizes: [i64; 3]) -> u32 {
    bit_length(sizes.iter().map(|&s| s as u128).product())
}

/// Packs three integers in mixed radix `sizes` and writes the result as
/// little-endian bytes, the last chunk holding the remaining bits.
fn send_ints(w: &mut BitWriter, nbits: u32, sizes: [i64; 3], nums: [i64; 3]) {
    let mut v = (nums[0] as u128 * sizes[1] as u128 + nums[1] as u128) * sizes[2] as u128 + nums[2] as u128;
    let mut bits = nbits;
    while bits > 8 {
        w.write(8, v & 0xff);
        v >>= 8;
        bits -= 8;
    }
    if bits > 0 {
        w.write(bits, v);
    }
}

fn receive_ints(r: &mut BitReader, nbits: u32, sizes: [i64; 3]) -> Option<[i64; 3]> {
    let mut v: u128 = 0;
    let mut shift = 0;
    let mut bits = nbits;
    while bits > 8 {
        v |= r.read(8)? << shift;
        shift += 8;
        bits -= 8;
    }
    if bits > 0 {
        v |= r.read(bits)? << shift;
    }
    let (s0, s1, s2) = (sizes[0] as u128, sizes[1] as u128, sizes[2] as u128);
    let n2 = v % s2;
    v /= s2;
    let n1 = v % s1;
    let n0 = v / s1;
    if n0 >= s0 {
        return None;
    }
    Some([n0 as i64, n1 as i64, n2 as i64])
}

// Single precision on purpose: the reference writer rounds in f32, and
// matching it keeps our files byte-identical to its output.
fn quantize(x: f64, precision: f32) -> Option<i64> {
    let x = x as f32;
    let lf = if x >= 0.0 { x * precision + 0.5 } else { x * precision - 0.5 };
    if f64::from(lf.abs()) > MAXABS || lf.is_nan() {
        return None;
    }
    Some(lf.trunc() as i64)
}

fn put_i32(out: &mut Vec<u8>, v: i32) {
    out.extend_from_slice(&v.to_be_bytes());
}

fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_be_bytes());
}

fn encode_coords(out: &mut Vec<u8>, positions: &[Vec3], precision: f32, frame: usize) -> Result<(), TrajError> {
    let natoms = positions.len();
    put_i32(out, natoms as i32);
    if natoms <= UNCOMPRESSED_MAX {
        for p in positions {
            for c in p {
                put_f32(out, *c as f32);
            }
        }
        return Ok(());
    }
    put_f32(out, precision);

    let mut ints: Vec<[i64; 3]> = Vec::with_capacity(natoms);
    let mut minint = [i64::MAX; 3];
    let mut maxint = [i64::MIN; 3];
    let mut mindiff = i64::from(i32::MAX);
    let mut old = [0i64; 3];
    for (i, p) in positions.iter().enumerate() {
        let mut q = [0i64; 3];
        for d in 0..3 {
            q[d] = quantize(p[d], precision).ok_or(TrajError::CoordinateOverflow { frame, value: p[d] })?;
            minint[d] = minint[d].min(q[d]);
            maxint[d] = maxint[d].max(q[d]);
        }
        let diff: i64 = (0..3).map(|d| (old[d] - q[d]).abs()).sum();
        if i >= 1 && diff < mindiff {
            mindiff = diff;
        }
        old = q;
        ints.push(q);
    }
    for d in 0..3 {
        put_i32(out, minint[d] as i32);
    }
    for d in 0..3 {
        put_i32(out, maxint[d] as i32);
    }
    for d in 0..3 {
        if (maxint[d] - minint[d]) as f64 >= MAXABS {
            let value = positions.iter().map(|p| p[d]).fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
            return Err(TrajError::CoordinateOverflow { frame, value });
        }
    }
    let sizeint = [maxint[0] - minint[0] + 1, maxint[1] - minint[1] + 1, maxint[2] - minint[2] + 1];
    let large = (sizeint[0] | sizeint[1] | sizeint[2]) > 0xff_ffff;
    let bitsizeint = sizeint.map(|s| bit_length(s as u128));
    let bitsize = if large { 0 } else { sizeofints(sizeint) };

    let mut smallidx = FIRSTIDX;
    while smallidx < LASTIDX - 1 && MAGICINTS[smallidx] < mindiff {
        smallidx += 1;
    }
    put_i32(out, smallidx as i32);

    // Capped one below the table end so the index never leaves the table.
    let maxidx = (LASTIDX - 1).min(smallidx + 8);
    let minidx = maxidx - 8;
    let mut smaller = MAGICINTS[FIRSTIDX.max(smallidx - 1)] / 2;
    let mut smallnum = MAGICINTS[smallidx] / 2;
    let mut sizesmall = [MAGICINTS[smallidx]; 3];
    let larger = MAGICINTS[maxidx] / 2;

    let mut w = BitWriter::new();
    let mut prevrun: i64 = -1;
    let mut prev = [0i64; 3];
    let mut run_buf: Vec<[i64; 3]> = Vec::with_capacity(8);
    let close = |a: [i64; 3], b: [i64; 3], limit: i64| (0..3).all(|d| (a[d] - b[d]).abs() < limit);
    let mut i = 0;
    while i < natoms {
        let mut is_small = false;
        let this = ints[i];
        let mut is_smaller: i64 = if smallidx < maxidx && i >= 1 && close(this, prev, larger) {
            1
        } else if smallidx > minidx {
            -1
        } else {
            0
        };
        if i + 1 < natoms && close(this, ints[i + 1], smallnum) {
            // Swap the first two atoms of the run; water oxygens sit between
            // their hydrogens, so this shortens the first delta.
            ints.swap(i, i + 1);
            is_small = true;
        }
        let this = ints[i];
        let offset = [this[0] - minint[0], this[1] - minint[1], this[2] - minint[2]];
        if large {
            for d in 0..3 {
                w.write(bitsizeint[d], offset[d] as u128);
            }
        } else {
            send_ints(&mut w, bitsize, sizeint, offset);
        }
        prev = this;
        i += 1;

        run_buf.clear();
        let mut run: i64 = 0;
        if !is_small && is_smaller == -1 {
            is_smaller = 0;
        }
        while is_small && run < MAX_RUN {
            let this = ints[i];
            let sq: i64 = (0..3).map(|d| (this[d] - prev[d]).pow(2)).sum();
            if is_smaller == -1 && sq >= smaller * smaller {
                is_smaller = 0;
            }
            run_buf.push([this[0] - prev[0] + smallnum, this[1] - prev[1] + smallnum, this[2] - prev[2] + smallnum]);
            run += 3;
            prev = this;
            i += 1;
            is_small = i < natoms && close(ints[i], prev, smallnum);
        }
        if run != prevrun || is_smaller != 0 {
            prevrun = run;
            w.write(1, 1);
            w.write(5, (run + is_smaller + 1) as u128);
        } else {
            w.write(1, 0);
        }
        for delta in &run_buf {
            send_ints(&mut w, smallidx as u32, sizesmall, *delta);
        }
        if is_smaller != 0 {
            smallidx = (smallidx as i64 + is_smaller) as usize;
            if is_smaller < 0 {
                smallnum = smaller;
                smaller = MAGICINTS[smallidx - 1] / 2;
            } else {
                smaller = smallnum;
                smallnum = MAGICINTS[smallidx] / 2;
            }
            sizesmall = [MAGICINTS[smallidx]; 3];
        }
    }
    let data = w.finish();
    put_i32(out, data.len() as i32);
    out.extend_from_slice(&data);
    out.resize(out.len() + (4 - data.len() % 4) % 4, 0);
    Ok(())
}

/// Encodes every frame at `precision` (quantization steps per nm).
pub fn write_xtc(trajectory: &Trajectory, precision: f64) -> Result<Vec<u8>, TrajError> {
    if !(precision.is_finite() && precision > 0.0) {
        return Err(TrajError::InvalidPrecision(precision));
    }
    let mut out = Vec::new();
    for (index, frame) in trajectory.frames.iter().enumerate() {
        if frame.positions.len() != trajectory.atom_count {
            return Err(TrajError::AtomCountChanged {
                frame: index,
                expected: trajectory.atom_count,
                found: frame.positions.len(),
            });
        }
        put_i32(&mut out, XTC_MAGIC);
        put_i32(&mut out, frame.positions.len() as i32);
        let step = i32::try_from(frame.step).map_err(|_| TrajError::Format {
            offset: out.len() as u64,
            message: format!("frame {index}: step {} does not fit in 32 bits", frame.step),
        })?;
        put_i32(&mut out, step);
        put_f32(&mut out, frame.time as f32);
        for row in &frame.box_matrix {
            for v in row {
                put_f32(&mut out, *v as f32);
            }
        }
        encode_coords(&mut out, &frame.positions, precision as f32, index)?;
    }
    Ok(out)
}

/// Incremental XTC decoder; yields one frame at a time.
pub struct XtcReader<R> {
    inner: R,
    offset: u64,
    frames_read: usize,
    atom_count: Option<usize>,
    done: bool,
}

enum Fail {
    Eof,
    Format(String),
}

impl<R: Read> XtcReader<R> {
    pub fn new(inner: R) -> Self {
        XtcReader { inner, offset: 0, frames_read: 0, atom_count: None, done: false }
    }

    pub fn frames_read(&self) -> usize {
        self.frames_read
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<usize, std::io::Error> {
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        self.offset += got as u64;
        Ok(got)
    }

    fn word(&mut self) -> Result<[u8; 4], TrajError> {
        let mut b = [0u8; 4];
        if self.fill(&mut b)? < 4 {
            return Err(self.truncated());
        }
        Ok(b)
    }

    fn int(&mut self) -> Result<i32, TrajError> {
        Ok(i32::from_be_bytes(self.word()?))
    }

    fn float(&mut self) -> Result<f32, TrajError> {
        Ok(f32::from_be_bytes(self.word()?))
    }

    fn truncated(&self) -> TrajError {
        TrajError::TruncatedFrame { frames_read: self.frames_read, partial: None }
    }

    fn format(&self, at: u64, message: impl Into<String>) -> TrajError {
        TrajError::Format { offset: at, message: message.into() }
    }

    fn read_frame(&mut self) -> Result<Option<Frame>, TrajError> {
        let start = self.offset;
        let mut magic = [0u8; 4];
        match self.fill(&mut magic)? {
            0 => return Ok(None),
            4 => {}
            _ => return Err(self.truncated()),
        }
        if i32::from_be_bytes(magic) != XTC_MAGIC {
            return Err(self.format(start, format!("bad magic number {}", i32::from_be_bytes(magic))));
        }
        let natoms_at = self.offset;
        let natoms = self.int()?;
        if natoms < 0 {
            return Err(self.format(natoms_at, format!("negative atom count {natoms}")));
        }
        let natoms = natoms as usize;
        if let Some(expected) = self.atom_count {
            if natoms != expected {
                return Err(TrajError::AtomCountChanged { frame: self.frames_read, expected, found: natoms });
            }
        }
        let step = i64::from(self.int()?);
        let time_at = self.offset;
        let time = f64::from(self.float()?);
        if !time.is_finite() {
            return Err(self.format(time_at, "frame time is not finite"));
        }
        let mut box_matrix = [[0.0; 3]; 3];
        for row in &mut box_matrix {
            for v in row.iter_mut() {
                *v = f64::from(self.float()?);
            }
        }
        let lsize_at = self.offset;
        let lsize = self.int()?;
        if lsize < 0 || lsize as usize != natoms {
            return Err(self.format(lsize_at, format!("coordinate block has {lsize} atoms, header says {natoms}")));
        }
        let (positions, precision) = if natoms <= UNCOMPRESSED_MAX {
            let mut positions = Vec::with_capacity(natoms);
            for _ in 0..natoms {
                positions.push([f64::from(self.float()?), f64::from(self.float()?), f64::from(self.float()?)]);
            }
            (positions, 0.0)
        } else {
            self.read_compressed(natoms)?
        };
        self.atom_count = Some(natoms);
        self.frames_read += 1;
        Ok(Some(Frame { step, time, box_matrix, positions, precision }))
    }

    fn read_compressed(&mut self, natoms: usize) -> Result<(Vec<Vec3>, f64), TrajError> {
        let prec_at = self.offset;
        let precision = self.float()?;
        if !(precision.is_finite() && precision > 0.0) {
            return Err(self.format(prec_at, format!("invalid precision {precision}")));
        }
        let bounds_at = self.offset;
        let mut minint = [0i64; 3];
        let mut maxint = [0i64; 3];
        for v in &mut minint {
            *v = i64::from(self.int()?);
        }
        for v in &mut maxint {
            *v = i64::from(self.int()?);
        }
        let sizeint = [maxint[0] - minint[0] + 1, maxint[1] - minint[1] + 1, maxint[2] - minint[2] + 1];
        if sizeint.iter().any(|&s| s < 1) {
            return Err(self.format(bounds_at, "integer bounds are inverted"));
        }
        let idx_at = self.offset;
        let smallidx = self.int()?;
        if !(FIRSTIDX as i32..LASTIDX as i32).contains(&smallidx) {
            return Err(self.format(idx_at, format!("small-delta index {smallidx} out of range")));
        }
        let len_at = self.offset;
        let nbytes = self.int()?;
        if nbytes < 0 {
            return Err(self.format(len_at, format!("negative payload length {nbytes}")));
        }
        // Every atom costs at least one bit, which bounds the allocation below.
        if natoms as u64 > nbytes as u64 * 8 {
            return Err(self.format(len_at, format!("{natoms} atoms cannot fit in {nbytes} bytes")));
        }
        let padded = (nbytes as u64).div_ceil(4) * 4;
        let mut data = Vec::new();
        let got = (&mut self.inner).take(padded).read_to_end(&mut data)?;
        self.offset += got as u64;
        if (got as u64) < padded {
            return Err(self.truncated());
        }
        data.truncate(nbytes as usize);
        match decode_bits(&data, natoms, f64::from(precision), minint, sizeint, smallidx as usize) {
            Ok(positions) => Ok((positions, f64::from(precision))),
            Err(Fail::Eof) => Err(self.format(len_at, "compressed payload ends early")),
            Err(Fail::Format(m)) => Err(self.format(len_at, m)),
        }
    }
}

fn decode_bits(
    data: &[u8],
    natoms: usize,
    precision: f64,
    minint: [i64; 3],
    sizeint: [i64; 3],
    mut smallidx: usize,
) -> Result<Vec<Vec3>, Fail> {
    let large = (sizeint[0] | sizeint[1] | sizeint[2]) > 0xff_ffff;
    let bitsizeint = sizeint.map(|s| bit_length(s as u128));
    let bitsize = if large { 0 } else { sizeofints(sizeint) };
    let mut smaller = MAGICINTS[FIRSTIDX.max(smallidx - 1)] / 2;
    let mut smallnum = MAGICINTS[smallidx] / 2;
    let mut sizesmall = [MAGICINTS[smallidx]; 3];

    let mut r = BitReader { data, bit: 0 };
    let mut out: Vec<Vec3> = Vec::with_capacity(natoms);
    let scale = |q: [i64; 3]| [q[0] as f64 / precision, q[1] as f64 / precision, q[2] as f64 / precision];
    let mut run: i64 = 0;
    while out.len() < natoms {
        let mut this = [0i64; 3];
        if large {
            for d in 0..3 {
                this[d] = r.read(bitsizeint[d]).ok_or(Fail::Eof)? as i64;
            }
        } else {
            this = receive_ints(&mut r, bitsize, sizeint).ok_or(Fail::Eof)?;
        }
        for d in 0..3 {
            this[d] += minint[d];
        }
        let mut prev = this;

        let mut is_smaller: i64 = 0;
        if r.read(1).ok_or(Fail::Eof)? == 1 {
            run = r.read(5).ok_or(Fail::Eof)? as i64;
            is_smaller = run % 3;
            run -= is_smaller;
            is_smaller -= 1;
        }
        if run > 0 {
            if out.len() + 1 + (run / 3) as usize > natoms {
                return Err(Fail::Format("run of small deltas overruns the atom count".into()));
            }
            for k in (0..run).step_by(3) {
                let mut next = receive_ints(&mut r, smallidx as u32, sizesmall).ok_or(Fail::Eof)?;
                for d in 0..3 {
                    next[d] += prev[d] - smallnum;
                }
                if k == 0 {
                    std::mem::swap(&mut next, &mut prev);
                    out.push(scale(prev));
                } else {
                    prev = next;
                }
                out.push(scale(next));
            }
        } else {
            out.push(scale(this));
        }
        let idx = smallidx as i64 + is_smaller;
        if !(FIRSTIDX as i64..LASTIDX as i64).contains(&idx) {
            return Err(Fail::Format(format!("small-delta index {idx} out of range")));
        }
        smallidx = idx as usize;
        if is_smaller < 0 {
            smallnum = smaller;
            smaller = if smallidx > FIRSTIDX { MAGICINTS[smallidx - 1] / 2 } else { 0 };
        } else if is_smaller > 0 {
            smaller = smallnum;
            smallnum = MAGICINTS[smallidx] / 2;
        }
        sizesmall = [MAGICINTS[smallidx]; 3];
    }
    Ok(out)
}

impl<R: Read> Iterator for XtcReader<R> {
    type Item = Result<Frame, TrajError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_frame() {
            Ok(Some(frame)) => Some(Ok(frame)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Decodes a whole XTC stream. A stream cut inside a frame yields
/// `TruncatedFrame` carrying the complete frames before the cut.
pub fn read_xtc(bytes: &[u8]) -> Result<Trajectory, TrajError> {
    let mut traj = Trajectory::new(0);
    for frame in XtcReader::new(bytes) {
        match frame {
            Ok(frame) => traj.push(frame)?,
            Err(TrajError::TruncatedFrame { frames_read, .. }) => {
                return Err(TrajError::TruncatedFrame { frames_read, partial: Some(Box::new(traj)) })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}
