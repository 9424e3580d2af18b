from rich.console import Console
from rich.markdown import Markdown
from rich.panel import Panel

# Registry: command key -> markdown text
FORMULAS = {
    "spectrum": """# Spectrum Lambda_m

Formulas:
- Lambda_m = 2π { Σ_j b_j (2m)^j : b_j ∈ {0, m/2}, finite sums }
- λ_n: the binary digits of n select the powers (2m)^j; ascending in n
- Pair measure: Bernoulli convolution with ratio ρ = 1/(2m)
- Displayed prefixes:
  - Λ₂ / 2π = 0, 1, 4, 5, 16, 17, 20
  - Λ₃ / 2π = 0, 3/2, 9, 21/2, 18 as displayed; the digit rule gives 54 and is kept
  - Λ₄ / 2π = 0, 2, 16, 18, 128, 130

Output: spectrum.csv with columns n, lambda
""",

    "charfun": """# Fourier Transform σ̂

Formulas:
- σ̂(t) = ∫ e^{itu} dσ(u)
- AIFS measure: σ̂(t) = Π_{k≥1} cos(ρ^k t), truncated at depth K
- Tail bound: |σ̂ − Π_{k≤K}| ≤ t² ρ^{2(K+1)} / (2(1 − ρ²))
- Atomic: σ̂(t) = Σ w_k e^{i t u_k}
- Parseval deficit: D_N(t) = 1 − Σ_{n<N} |σ̂(t − λ_n)|²

Output: charfun.csv with columns t, sigma_hat, err
""",

    "covariance": """# Covariance of X_σ

Formulas:
- χ_t(u) = (e^{iut} − 1) / (iu)
- K(t, s) = ∫ χ_t χ_s* dσ = ½ (r(t) + r(s) − r(t − s))
- r(t) = 2 ∫ (1 − cos tu) / u² dσ(u)
- r′(t) = 2 ∫ sin(tu) / u dσ(u) = 2 ∫_0^t σ̂ for even σ
- Kolmogorov: r(t) ≤ C t on [0, 1] when ∫ dσ / (1 + |u|) < ∞

Output: variance.csv (t, r, r_prime), kernel.csv (t, s, K)
""",

    "simulate": """# Chaos Expansion Paths

Formulas:
- X(t) = Σ_n c_n(t) Z_n,   c_n(t) = ∫_0^t σ̂(y − λ_n) dy
- W(t) = Σ_n σ̂(t − λ_n) Z_n,   E|W(t)|² = 1
- Z_n^(m) from Philox keyed by (seed, m): independent of thread count
- Bridge example: σ = Σ_{n≥1} δ_{2n},   r(t) = t(π − t)/2 on [0, π]

Output: paths.csv, ensemble.csv (t, mean, var, stderr, r, deficit)
""",

    "verify": """# Invariant Suite

Checks:
- Parseval: 0 ≤ D_N(t) ≤ tol on random t
- Orthonormality: σ̂(λ − λ′) = δ_{λλ′}
- Lipschitz: ‖X(t) − X(s)‖ ≤ |t − s|
- Derivative: ‖(X(t) − X(s))/(t − s) − W(t)‖² ≤ (t − s)²/3
- Våge: ‖h ◊ u‖_{−k} ≤ A(k − l) ‖h‖_{−l} ‖u‖_{−k},  A(2) = √(π/2)
- Q_σ: Σ |⟨ψ̂, e_λ⟩|² = ∫ |ψ̂|² dσ
- Wick-Itô: ∫_0^1 X ◊ W dt = ½ X(1)^{◊2}
- Itô: f(X(t)) = f(X(t₀)) + ∫ f′(X) ◊ W ds + ½ ∫ f″(X) r′ ds

Output: report.csv, summary.json; exit 0 iff every check passes
""",
}

FALLBACK = "# Formulas\nNo formulas registered for this command yet."


def formula_text(key: str) -> str:
    return FORMULAS.get(key, FALLBACK)


def show_formulas(console: Console, key: str | None = None) -> None:
    """Print one registry entry, or all of them."""
    keys = [key] if key else list(FORMULAS)
    for k in keys:
        console.print(Panel(Markdown(formula_text(k)), title=k, expand=True))
