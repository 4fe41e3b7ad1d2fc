"""High-precision reference values for the regression constants in the test suites.

Run with `python3 tools/oracles/special_values.py`. Requires mpmath only.
Every value printed here is computed from first principles at 40 digits and
copied verbatim into the Rust tests.
"""
import itertools

import mpmath as mp

mp.mp.dps = 40


def coupling_from_b(b):
    return mp.sqrt(8 * mp.pi * 2 * b / (1 - 2 * b))


def s_matrix(beta, b):
    s = mp.sin(2 * mp.pi * b)
    return (mp.sinh(beta) - 1j * s) / (mp.sinh(beta) + 1j * s)


def two_body_f(beta, b):
    bh = mp.mpf(1) / 2 - b
    z = 1j * beta / (2 * mp.pi)
    g = mp.barnesg
    num = g(1 - b - z) * g(2 - b + z) * g(1 - bh - z) * g(2 - bh + z)
    den = g(b - z) * g(1 + b + z) * g(bh - z) * g(1 + bh + z)
    return num / den / (mp.gamma(1 + z) * mp.gamma(-z))


def field_constant(b):
    integral = mp.quad(lambda t: t / mp.sin(t), [0, 2 * mp.pi * b])
    return (-1j / mp.sqrt(2 * mp.sin(mp.pi * b))) * mp.exp(integral / (2 * mp.pi))


def field_p(betas, ls, b):
    g = coupling_from_b(b)
    c = field_constant(b)
    return c ** len(betas) * (2j * mp.pi * b / g) * sum((-1) ** l for l in ls)


def k_transform(betas, b, p):
    n = len(betas)
    total = 0
    s2 = mp.sin(2 * mp.pi * b)
    for ls in itertools.product([0, 1], repeat=n):
        term = (-1) ** sum(ls)
        for k in range(n):
            for s in range(k + 1, n):
                term *= 1 - 1j * (ls[k] - ls[s]) * s2 / mp.sinh(betas[k] - betas[s])
        total += term * p(betas, ls, b)
    return total


def form_factor(betas, b):
    value = k_transform(betas, b, field_p)
    for a in range(len(betas)):
        for c in range(a + 1, len(betas)):
            value *= two_body_f(betas[a] - betas[c], b)
    return value


def show(name, z):
    z = mp.mpc(z)
    print(f"{name}: re = {mp.nstr(z.real, 25)}, im = {mp.nstr(z.imag, 25)}")


def main():
    show("loggamma(4+3i)", mp.loggamma(mp.mpc(4, 3)))
    show("loggamma(-2.5+0.3i)", mp.loggamma(mp.mpc(-2.5, 0.3)))
    glaisher = mp.glaisher
    closed = mp.log(2) / 24 + mp.mpf(1) / 8 - mp.log(mp.pi) / 4 - 3 * mp.log(glaisher) / 2
    show("log G(1/2) closed form", closed)
    show("log G(1/2) mpmath", mp.log(mp.barnesg(mp.mpf(1) / 2)))
    show("log G(3.3+2.1i)", mp.log(mp.barnesg(mp.mpc(3.3, 2.1))))
    show("G(-2.5+0.7i)", mp.barnesg(mp.mpc(-2.5, 0.7)))
    for b in ["0.1", "0.25", "0.4"]:
        b = mp.mpf(b)
        show(f"F(i pi) b={b}", two_body_f(1j * mp.pi, b))
        show(f"F(0.7) b={b}", two_body_f(mp.mpf("0.7"), b))
        show(f"F(0.4+2i) b={b}", two_body_f(mp.mpc("0.4", "2.0"), b))
    print("int_0^{pi/2} t/sin t dt =", mp.nstr(mp.quad(lambda t: t / mp.sin(t), [0, mp.pi / 2]), 25))
    print("2*Catalan              =", mp.nstr(2 * mp.catalan, 25))
    b = mp.mpf("0.25")
    show("field constant b=1/4", field_constant(b))
    show("K2 field b=1/4 at (0.3,-0.7)", k_transform([mp.mpf("0.3"), mp.mpf("-0.7")], b, field_p))
    show("F1 field b=1/4", form_factor([mp.mpf("0.1")], b))
    show("F3 field b=1/4 at (0.2,-0.4,1.1)", form_factor([mp.mpf("0.2"), mp.mpf("-0.4"), mp.mpf("1.1")], b))
    for x in [1, 2, 4]:
        print(f"K0({x}) =", mp.nstr(mp.besselk(0, x), 25))


if __name__ == "__main__":
    main()
