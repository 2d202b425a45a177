/// Every signed composition of `j`, listed explicitly as `(n_i, m_i)` pairs
/// with `m_i >= 1` and `n_i` a signed flat count.
pub fn enumerate_signed_compositions(j: i64) -> Vec<Vec<(i64, i64)>> {
    fn go(rest: i64, prefix: &mut Vec<(i64, i64)>, out: &mut Vec<Vec<(i64, i64)>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for m in 1..=rest {
            for flats in 0..=(rest - m) {
                let signs: &[i64] = if flats == 0 { &[0] } else { &[1, -1] };
                for &s in signs {
                    prefix.push((s * flats, m));
                    go(rest - m - flats, prefix, out);
                    prefix.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    go(j, &mut Vec::new(), &mut out);
    out
}
