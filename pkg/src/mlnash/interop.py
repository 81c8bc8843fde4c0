"""Text formats: Gambit payoff-list ``.nfg``, native game JSON, the
``MLIR-NASH v1`` model format and JSON-lines solver reports.

Numbers are written as integers when integral and otherwise as the shortest
decimal that round-trips (``repr``), so every writer/reader pair is lossless.
All file writers go through a temporary file and an atomic rename.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .formulations import (Constraint, FormulationId, MultilinearProgram, Objective, Variable,
                           VariableRef)
from .game import Game
from .report import SolveReport

MODEL_HEADER = "MLIR-NASH v1"
GAME_JSON_FORMAT = "mlnash-game"


def format_number(value: float) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"cannot serialise non-finite number {value!r}")
    if value.is_integer() and abs(value) < 2**53 and not (value == 0 and math.copysign(1, value) < 0):
        return str(int(value))
    return repr(value)


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# Gambit nfg (payoff-list variant)

_TOKEN = re.compile(r'\s*(?:(?P<str>"(?:[^"\\]|\\.)*")|(?P<brace>[{}])|(?P<word>[^\s{}"]+))')


def _tokens(text: str):
    """Yield (kind, value, line, column) with 1-based positions."""
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == m.start() or m.lastgroup is None:
            rest = text[pos:]
            if rest.strip():
                start = pos + len(rest) - len(rest.lstrip())
                line = np.searchsorted(line_starts, start, side="right")
                raise ParseError(f"unexpected character {text[start]!r}", int(line),
                                 start - line_starts[line - 1] + 1)
            return
        start = m.start(m.lastgroup)
        line = int(np.searchsorted(line_starts, start, side="right"))
        col = start - line_starts[line - 1] + 1
        value = m.group(m.lastgroup)
        if m.lastgroup == "str":
            value = re.sub(r"\\(.)", r"\1", value[1:-1])
        yield m.lastgroup, value, line, col
        pos = m.end()


class _Cursor:
    def __init__(self, text: str):
        self.items = list(_tokens(text))
        self.k = 0
        last = self.items[-1] if self.items else ("", "", 1, 1)
        self.end = (last[2], last[3] + len(str(last[1])))

    def peek(self):
        return self.items[self.k] if self.k < len(self.items) else None

    def take(self, kind: str | None = None, value: str | None = None, what: str = "token"):
        item = self.peek()
        if item is None:
            raise ParseError(f"unexpected end of input, expected {what}", *self.end)
        if (kind and item[0] != kind) or (value is not None and item[1] != value):
            raise ParseError(f"expected {what}, found {item[1]!r}", item[2], item[3])
        self.k += 1
        return item


def read_nfg(text: str) -> Game:
    """Parse a normal-form payoff-list file.

    Header ``NFG 1 R "<title>" { "<p1>" ... } { n_1 ... n_k } ["<comment>"]``
    followed by one payoff per player for each pure profile, the first
    player's strategy index varying fastest.
    """
    cur = _Cursor(text)
    cur.take("word", "NFG", "'NFG'")
    cur.take("word", "1", "version 1")
    _, rep, line, col = cur.take("word", what="number representation")
    if rep not in ("R", "D"):
        raise ParseError(f"number representation must be R or D, found {rep!r}", line, col)
    title = cur.take("str", what="quoted title")[1]
    cur.take("brace", "{", "'{' opening the player list")
    players = []
    while cur.peek() is not None and cur.peek()[0] == "str":
        players.append(cur.take("str")[1])
    cur.take("brace", "}", "'}' closing the player list")
    if len(players) < 2:
        raise ParseError(f"need at least 2 players, found {len(players)}", line, col)
    _, _, line, col = cur.take("brace", "{", "'{' opening the strategy counts")
    counts = []
    while cur.peek() is not None and cur.peek()[0] == "word":
        _, word, wl, wc = cur.take("word")
        if not re.fullmatch(r"[0-9]+", word) or int(word) < 1:
            raise ParseError(f"strategy count must be a positive integer, found {word!r}", wl, wc)
        counts.append(int(word))
    if cur.peek() is not None and cur.peek()[0] == "brace" and cur.peek()[1] == "{":
        raise ParseError("explicit strategy-name lists are not supported; give counts only",
                         cur.peek()[2], cur.peek()[3])
    cur.take("brace", "}", "'}' closing the strategy counts")
    if len(counts) != len(players):
        raise ParseError(f"{len(players)} players but {len(counts)} strategy counts", line, col)
    if cur.peek() is not None and cur.peek()[0] == "str":
        cur.take("str")  # optional comment
    n, size = len(counts), math.prod(counts)
    expected = size * n
    numbers = []
    while cur.peek() is not None:
        kind, word, wl, wc = cur.take()
        if kind != "word":
            raise ParseError(f"expected a payoff, found {word!r}", wl, wc)
        try:
            value = float(word)
        except ValueError:
            raise ParseError(f"non-numeric payoff {word!r}", wl, wc) from None
        if not math.isfinite(value):
            raise ParseError(f"non-finite payoff {word!r}", wl, wc)
        if len(numbers) == expected:
            raise ParseError(f"too many payoffs: expected {expected}", wl, wc)
        numbers.append(value)
    if len(numbers) != expected:
        raise ParseError(f"wrong payoff count: expected {expected}, found {len(numbers)}", *cur.end)
    flat = np.array(numbers).reshape(size, n)  # row = profile in first-fastest order
    # first-fastest order is Fortran order over the strategy axes
    tensors = tuple(flat[:, i].reshape(counts, order="F") for i in range(n))
    return Game(tensors, name=title)


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_nfg(game: Game) -> str:
    """Canonical payoff-list text; players are named ``Player 1..n``."""
    n = game.num_players
    players = " ".join(_quote(f"Player {i + 1}") for i in range(n))
    counts = " ".join(str(k) for k in game.strategy_counts)
    stacked = np.stack([p.reshape(-1, order="F") for p in game.payoffs], axis=1)
    body = " ".join(format_number(v) for v in stacked.ravel())
    return f"NFG 1 R {_quote(game.name)} {{ {players} }} {{ {counts} }}\n\n{body}\n"


# --------------------------------------------------------------------------
# native JSON


def game_to_json(game: Game) -> str:
    """Flat row-major payoff lists, one per player; -0.0 and full precision survive."""
    payoffs = ", ".join("[" + ", ".join(format_number(v) for v in p.ravel()) + "]" for p in game.payoffs)
    return (f'{{"format": "{GAME_JSON_FORMAT}", "version": 1, "name": {json.dumps(game.name)}, '
            f'"strategy_counts": {json.dumps(list(game.strategy_counts))}, "payoffs": [{payoffs}]}}\n')


def game_from_json(text: str) -> Game:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(record, dict) or record.get("format") != GAME_JSON_FORMAT:
        raise ValidationError(f"not a {GAME_JSON_FORMAT} document")
    if record.get("version") != 1:
        raise ValidationError(f"unsupported game JSON version {record.get('version')!r}")
    try:
        return Game.from_flat(record["strategy_counts"], record["payoffs"], record.get("name", ""))
    except KeyError as exc:
        raise ValidationError(f"game JSON misses field {exc.args[0]!r}") from None


def write_game_json(game: Game, path) -> None:
    write_atomic(path, game_to_json(game))


def read_game_json(path) -> Game:
    return game_from_json(Path(path).read_text(encoding="utf-8"))


def read_game(path) -> Game:
    """Load ``.nfg`` or ``.game.json``/``.json`` by extension."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".nfg":
        return read_nfg(text)
    if path.suffix == ".json":
        return game_from_json(text)
    raise ValidationError(f"unknown game file type {path.name!r}; expected .nfg or .game.json")


def write_game(game: Game, path) -> None:
    path = Path(path)
    if path.suffix == ".nfg":
        write_atomic(path, write_nfg(game))
    elif path.suffix == ".json":
        write_atomic(path, game_to_json(game))
    else:
        raise ValidationError(f"unknown game file type {path.name!r}; expected .nfg or .game.json")


# --------------------------------------------------------------------------
# MLIR-NASH v1 model text

_VAR_NAME = re.compile(r"([A-Za-z_]+)\[(\d+)(?:,(\d+))?\]")


def _parse_ref(name: str, line: int, col: int) -> VariableRef:
    m = _VAR_NAME.fullmatch(name)
    if m is None:
        raise ParseError(f"bad variable name {name!r}", line, col)
    kind, player, strategy = m.groups()
    return VariableRef(kind, int(player), None if strategy is None else int(strategy))


def export_model(program: MultilinearProgram) -> str:
    """Serialise a program; monomials are numbered in order of first use."""
    out = [MODEL_HEADER, "META"]
    out.append(f"  formulation {program.formulation.code}")
    out.append(f"  game_hash {program.game_hash or '-'}")
    out.append("  strategy_counts " + " ".join(map(str, program.strategy_counts)))
    target = "none" if program.target_value is None else format_number(program.target_value)
    out.append(f"  target_value {target}")
    for note in program.notes:
        out.append(f"  note {json.dumps(note)}")
    out.append("VARS")
    names = [v.ref.name for v in program.variables]
    for v in program.variables:
        flag = " BIN" if v.is_binary else ""
        out.append(f"  {v.ref.name} {format_number(v.lower)} {format_number(v.upper)}{flag}")
    monomials: list[str] = []

    def ids(terms) -> list[str]:
        refs = []
        for coef, mono in terms:
            refs.append(f"t{len(monomials)}")
            monomials.append(f"  t{len(monomials)} = {format_number(coef)} * " + " ".join(names[v] for v in mono))
        return refs

    con_lines = []
    for con in program.constraints:
        lhs = " + ".join(ids(con.terms))
        con_lines.append(f"  {con.name}: {lhs} {con.relation} {format_number(con.rhs)}")
    obj = program.objective
    obj_ids = ids(obj.terms)
    out.append("MONOMIALS")
    out.extend(monomials)
    out.append("CONSTRAINTS")
    out.extend(con_lines)
    out.append("OBJECTIVE")
    out.append(f"  sense {obj.sense}")
    if obj_ids:
        out.append("  terms " + " + ".join(obj_ids))
    out.append(f"  constant {format_number(obj.constant)}")
    out.append("END")
    return "\n".join(out) + "\n"


def _number(word: str, line: int, col: int) -> float:
    try:
        value = float(word)
    except ValueError:
        raise ParseError(f"expected a number, found {word!r}", line, col) from None
    if math.isnan(value):
        raise ParseError("NaN is not allowed", line, col)
    return value


def parse_model(text: str) -> MultilinearProgram:
    """Inverse of ``export_model``."""
    lines = text.split("\n")
    if not lines or lines[0].strip() != MODEL_HEADER:
        raise ParseError(f"missing header {MODEL_HEADER!r}", 1, 1)
    section = None
    meta: dict[str, str] = {}
    notes: list[str] = []
    variables: list[Variable] = []
    var_index: dict[str, int] = {}
    monomials: dict[str, tuple[float, tuple[int, ...]]] = {}
    constraints: list[Constraint] = []
    sense, obj_ids, constant = None, [], 0.0
    ended = False

    def terms_of(refs: str, lineno: int, col: int):
        out = []
        for ref in refs.split("+"):
            ref = ref.strip()
            if ref not in monomials:
                raise ParseError(f"unknown monomial {ref!r}", lineno, col)
            out.append(monomials[ref])
        return tuple(out)

    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        if ended:
            raise ParseError("content after END", lineno, col)
        if line in ("META", "VARS", "MONOMIALS", "CONSTRAINTS", "OBJECTIVE"):
            section = line
            continue
        if line == "END":
            ended = True
            continue
        if section == "META":
            key, _, value = line.partition(" ")
            if key == "note":
                notes.append(json.loads(value))
            else:
                meta[key] = value
        elif section == "VARS":
            parts = line.split()
            if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "BIN"):
                raise ParseError("expected 'name lower upper [BIN]'", lineno, col)
            ref = _parse_ref(parts[0], lineno, col)
            var_index[parts[0]] = len(variables)
            variables.append(Variable(ref, _number(parts[1], lineno, col), _number(parts[2], lineno, col),
                                      len(parts) == 4))
        elif section == "MONOMIALS":
            m = re.fullmatch(r"(t\d+)\s*=\s*(\S+)\s*\*\s*(.+)", line)
            if m is None:
                raise ParseError("expected 'tK = coeff * var ... var'", lineno, col)
            ident, coef, names = m.groups()
            try:
                mono = tuple(var_index[name] for name in names.split())
            except KeyError as exc:
                raise ParseError(f"undeclared variable {exc.args[0]!r}", lineno, col) from None
            monomials[ident] = (_number(coef, lineno, col), mono)
        elif section == "CONSTRAINTS":
            m = re.fullmatch(r"([^:]*):\s*(.+?)\s+(<=|>=|=)\s+(\S+)", line)
            if m is None:
                raise ParseError("expected 'name: tA + tB {<=,=,>=} rhs'", lineno, col)
            name, refs, relation, rhs = m.groups()
            constraints.append(Constraint(terms_of(refs, lineno, col), relation,
                                          _number(rhs, lineno, col), name))
        elif section == "OBJECTIVE":
            key, _, value = line.partition(" ")
            if key == "sense":
                sense = value
            elif key == "terms":
                obj_ids = terms_of(value, lineno, col)
            elif key == "constant":
                constant = _number(value, lineno, col)
            else:
                raise ParseError(f"unknown objective field {key!r}", lineno, col)
        else:
            raise ParseError("content outside a section", lineno, col)
    if not ended:
        raise ParseError("missing END", len(lines), 1)
    for key in ("formulation", "game_hash", "strategy_counts", "target_value"):
        if key not in meta:
            raise ParseError(f"META misses {key!r}", 2, 1)
    if sense is None:
        raise ParseError("OBJECTIVE misses 'sense'", len(lines), 1)
    target = None if meta["target_value"] == "none" else float(meta["target_value"])
    return MultilinearProgram(
        FormulationId.parse(meta["formulation"]), tuple(variables), tuple(constraints),
        Objective(sense, tuple(obj_ids), constant),
        tuple(int(k) for k in meta["strategy_counts"].split()),
        "" if meta["game_hash"] == "-" else meta["game_hash"], target, tuple(notes))


def write_model(program: MultilinearProgram, path) -> None:
    write_atomic(path, export_model(program))


# --------------------------------------------------------------------------
# reports


def _finite_or_none(value: float):
    value = float(value)
    return value if math.isfinite(value) else None


def report_record(report: SolveReport, instance: str = "", seed: int | None = None) -> dict:
    return {
        "instance": instance,
        "formulation": report.formulation,
        "solver": report.solver,
        "status": report.status,
        "max_regret": _finite_or_none(report.max_regret),
        "objective": _finite_or_none(report.objective),
        "wall_time_s": report.wall_time,
        "nodes": report.nodes_explored,
        "seed": seed,
        "profile": None if report.profile is None else [d.tolist() for d in report.profile.distributions],
    }


def write_report(report: SolveReport, instance: str = "", seed: int | None = None) -> str:
    """One JSON-lines record (with trailing newline)."""
    return json.dumps(report_record(report, instance, seed), sort_keys=True) + "\n"


def append_records(path, lines: list[str]) -> None:
    """Append JSON lines to ``path`` atomically (rewrite then rename)."""
    path = Path(path)
    existing = path.read_text(encoding="utf-8") if path.exists() else ""
    write_atomic(path, existing + "".join(lines))


def read_records(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
