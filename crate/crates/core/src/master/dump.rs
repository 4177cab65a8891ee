use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::C64;

/// Nonzero entries of a dense operator in row-major order.
pub fn dense_triplets(m: &DMatrix<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            if v != C64::new(0.0, 0.0) {
                out.push((r, c, v));
            }
        }
    }
    out
}

/// Sparse triplet text: a `# name rows cols nnz` header, then one
/// tab-separated `row col re im` line per entry, zero-based, with values in
/// shortest round-trip form.
pub fn write_triplets<W: Write>(
    w: &mut W,
    name: &str,
    shape: (usize, usize),
    triplets: impl IntoIterator<Item = (usize, usize, C64)>,
) -> io::Result<()> {
    let entries: Vec<_> = triplets.into_iter().collect();
    writeln!(w, "# {name} {} {} {}", shape.0, shape.1, entries.len())?;
    for (r, c, v) in entries {
        writeln!(w, "{r}\t{c}\t{:?}\t{:?}", v.re, v.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_text_round_trips() {
        let mut m = DMatrix::<C64>::zeros(3, 3);
        m[(0, 2)] = C64::new(0.1, -2.5);
        m[(2, 1)] = C64::new(1.0 / 3.0, 0.0);
        let mut buf = Vec::new();
        write_triplets(&mut buf, "H", (3, 3), dense_triplets(&m)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# H 3 3 2"));
        let mut back = DMatrix::<C64>::zeros(3, 3);
        for line in lines {
            let f: Vec<&str> = line.split('\t').collect();
            let (r, c): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
            back[(r, c)] = C64::new(f[2].parse().unwrap(), f[3].parse().unwrap());
        }
        assert_eq!(back, m);
    }
}
