#!/usr/bin/env python3
"""Writes the desk-scale benchmark fixtures.

Each benchmark is NAME.trs, NAME.term and NAME.expected. Expected normal
forms are computed here with plain Python arithmetic, not by rewriting.
"""
import random
from pathlib import Path

HERE = Path(__file__).parent


def peano(n):
    return "s(" * n + "0" + ")" * n


def plist(xs):
    return "".join(f"cons({peano(x)}," for x in xs) + "nil" + ")" * len(xs)


LE = """le(0,y) -> true
le(s(x),0) -> false
le(s(x),s(y)) -> le(x,y)
"""

FIB = """# naive Fibonacci on Peano numerals
symbols: 0:0 s:1 add:2 fib:1
vars: x y
rules:
add(x,0) -> x
add(x,s(y)) -> s(add(x,y))
fib(0) -> 0
fib(s(0)) -> s(0)
fib(s(s(x))) -> add(fib(s(x)),fib(x))
"""

SIEVE = """# sieve of Eratosthenes; chk(x,c,p) counts x down modulo p
symbols: 0:0 s:1 nil:0 cons:2 true:0 false:0 gen:2 sieve:1 filter:2 keep:3 chk:3
vars: x y c p xs
rules:
gen(x,0) -> nil
gen(x,s(c)) -> cons(x,gen(s(x),c))
sieve(nil) -> nil
sieve(cons(p,xs)) -> cons(p,sieve(filter(p,xs)))
filter(p,nil) -> nil
filter(p,cons(x,xs)) -> keep(chk(x,p,p),x,filter(p,xs))
keep(true,x,xs) -> xs
keep(false,x,xs) -> cons(x,xs)
chk(s(x),s(c),p) -> chk(x,c,p)
chk(s(x),0,p) -> chk(s(x),p,p)
chk(0,0,p) -> true
chk(0,s(c),p) -> false
"""

MERGESORT = """# top-down merge sort on lists of Peano numerals
symbols: 0:0 s:1 nil:0 cons:2 pair:2 true:0 false:0 le:2 msort:1 halves:1 split:1 sp:2 merge:2 mif:3
vars: x y xs ys a b
rules:
msort(nil) -> nil
msort(cons(x,nil)) -> cons(x,nil)
msort(cons(x,cons(y,xs))) -> halves(split(cons(x,cons(y,xs))))
halves(pair(a,b)) -> merge(msort(a),msort(b))
split(nil) -> pair(nil,nil)
split(cons(x,xs)) -> sp(x,split(xs))
sp(x,pair(a,b)) -> pair(cons(x,b),a)
merge(nil,ys) -> ys
merge(cons(x,xs),nil) -> cons(x,xs)
merge(cons(x,xs),cons(y,ys)) -> mif(le(x,y),cons(x,xs),cons(y,ys))
mif(true,cons(x,xs),ys) -> cons(x,merge(xs,ys))
mif(false,xs,cons(y,ys)) -> cons(y,merge(xs,ys))
""" + LE

BUBBLESORT = """# bubble sort: one pass per element
symbols: 0:0 s:1 nil:0 cons:2 true:0 false:0 le:2 bsort:1 bs:2 len:1 bubble:1 bsw:4
vars: x y n xs ys
rules:
bsort(xs) -> bs(len(xs),xs)
len(nil) -> 0
len(cons(x,xs)) -> s(len(xs))
bs(0,xs) -> xs
bs(s(n),xs) -> bs(n,bubble(xs))
bubble(nil) -> nil
bubble(cons(x,nil)) -> cons(x,nil)
bubble(cons(x,cons(y,ys))) -> bsw(le(x,y),x,y,ys)
bsw(true,x,y,ys) -> cons(x,bubble(cons(y,ys)))
bsw(false,x,y,ys) -> cons(y,bubble(cons(x,ys)))
""" + LE


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def primes_upto(n):
    return [p for p in range(2, n + 1) if all(p % d for d in range(2, p))]


def write(name, trs, term, expected):
    (HERE / f"{name}.trs").write_text(trs)
    (HERE / f"{name}.term").write_text(term + "\n")
    (HERE / f"{name}.expected").write_text(expected + "\n")


def main():
    rng = random.Random(20)
    write("fib20", FIB, f"fib({peano(20)})", peano(fib(20)))
    write("sieve100", SIEVE, f"sieve(gen({peano(2)},{peano(99)}))", plist(primes_upto(100)))
    xs = [rng.randrange(0, 64) for _ in range(32)]
    write("mergesort32", MERGESORT, f"msort({plist(xs)})", plist(sorted(xs)))
    ys = [rng.randrange(0, 64) for _ in range(50)]
    write("bubblesort50", BUBBLESORT, f"bsort({plist(ys)})", plist(sorted(ys)))


if __name__ == "__main__":
    main()
