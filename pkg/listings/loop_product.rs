//@ ensures res == a * b
fn product(a: u64, b: u64) -> u64 {
    let mut n: u64 = 0;
    let mut b2: u64 = b;
    let old_b: u64 = b;
    //@ invariant n == a * (old_b - b2) && b2 <= old_b
    loop {
        if b2 == 0 { break n; }
        n = n + a;
        b2 = b2 - 1;
    }
}
