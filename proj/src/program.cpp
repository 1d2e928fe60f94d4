#include "qnp/program.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace qnp {

const char* to_string(BlockType t) {
    switch (t) {
        case BlockType::CL: return "CL";
        case BlockType::CC: return "CC";
        case BlockType::QL: return "QL";
        case BlockType::QC: return "QC";
    }
    return "?";
}

const char* to_string(GateKind g) {
    switch (g) {
        case GateKind::X: return "x";
        case GateKind::Z: return "z";
        case GateKind::H: return "h";
        case GateKind::RX: return "rx";
        case GateKind::RY: return "ry";
        case GateKind::RZ: return "rz";
        case GateKind::CZ: return "cz";
    }
    return "?";
}

bool is_rotation(GateKind g) {
    return g == GateKind::RX || g == GateKind::RY || g == GateKind::RZ;
}

bool is_two_qubit(GateKind g) { return g == GateKind::CZ; }

bool is_classical_instr(const Instruction& in) {
    return std::holds_alternative<ClassicalCompute>(in) ||
           std::holds_alternative<SendMsg>(in) || std::holds_alternative<RecvMsg>(in);
}

bool is_quantum_instr(const Instruction& in) { return !is_classical_instr(in); }

const Block* Program::find_block(BlockId id) const {
    for (const auto& b : blocks)
        if (b.id == id) return &b;
    return nullptr;
}

Block* Program::find_block(BlockId id) {
    for (auto& b : blocks)
        if (b.id == id) return &b;
    return nullptr;
}

int Program::block_index(BlockId id) const {
    for (size_t i = 0; i < blocks.size(); ++i)
        if (blocks[i].id == id) return static_cast<int>(i);
    return -1;
}

std::map<BlockId, std::vector<BlockId>> Program::predecessors() const {
    std::map<BlockId, std::vector<BlockId>> preds;
    for (const auto& b : blocks) preds[b.id];
    if (precedence.empty()) {
        for (size_t i = 1; i < blocks.size(); ++i)
            preds[blocks[i].id].push_back(blocks[i - 1].id);
    } else {
        for (const auto& [from, to] : precedence) preds[to].push_back(from);
    }
    return preds;
}

void Program::renumber_chain() {
    std::map<BlockId, BlockId> remap;
    for (size_t i = 0; i < blocks.size(); ++i) {
        remap[blocks[i].id] = static_cast<BlockId>(i + 1);
        blocks[i].id = static_cast<BlockId>(i + 1);
    }
    precedence.clear();
    for (auto& cs : critical_sections) {
        cs.first = remap.at(cs.first);
        cs.last = remap.at(cs.last);
    }
}

bool TimingParams::valid() const {
    return classical_instr_ns > 0 && quantum_instr_ns > 0 && gate_1q_ns > 0 &&
           gate_2q_ns > 0 && sched_msg_ns > 0 && recv_proc_ns > 0;
}

// ---------------------------------------------------------------------------
// validation

namespace {

struct QubitEvent {
    int block_idx;
    enum Kind { Def, Use, Kill } kind;  // Def = alloc/epr, Kill = measure/free
};

// block-index reachability over the precedence DAG (inclusive of self)
std::vector<std::vector<bool>> reachability(const Program& p) {
    size_t n = p.blocks.size();
    std::map<BlockId, int> idx;
    for (size_t i = 0; i < n; ++i) idx[p.blocks[i].id] = static_cast<int>(i);
    std::vector<std::vector<int>> succ(n);
    auto preds = p.predecessors();
    for (const auto& [to, froms] : preds)
        for (BlockId f : froms)
            if (idx.count(f) && idx.count(to)) succ[idx[f]].push_back(idx[to]);
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    // process in reverse block order; edges only go forward when the
    // linear order is topological (checked separately)
    for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
        reach[i][i] = true;
        for (int s : succ[i])
            for (size_t j = 0; j < n; ++j)
                if (reach[s][j]) reach[i][j] = true;
    }
    return reach;
}

void collect_reads(const Instruction& in, std::vector<std::string>& out) {
    if (const auto* c = std::get_if<ClassicalCompute>(&in)) {
        if (c->dest)
            for (auto& v : c->expr.free_vars()) out.push_back(v);
    } else if (const auto* s = std::get_if<SendMsg>(&in)) {
        out.push_back(s->payload);
    } else if (const auto* g = std::get_if<QGate>(&in)) {
        if (is_rotation(g->gate))
            for (auto& v : g->angle.free_vars()) out.push_back(v);
    }
}

std::optional<std::string> write_of(const Instruction& in) {
    if (const auto* c = std::get_if<ClassicalCompute>(&in)) {
        if (c->dest) return *c->dest;
    } else if (const auto* r = std::get_if<RecvMsg>(&in)) {
        return r->dest;
    } else if (const auto* m = std::get_if<QMeasure>(&in)) {
        return m->dest;
    }
    return std::nullopt;
}

}  // namespace

ValidationReport validate(const Program& p) {
    ValidationReport rep;
    auto add = [&](BlockId b, const char* rule, std::string detail) {
        rep.violations.push_back({b, rule, std::move(detail)});
    };

    // unique block ids
    std::set<BlockId> ids;
    for (const auto& b : p.blocks) {
        if (!ids.insert(b.id).second) add(b.id, "duplicate block id", "");
    }

    // block-level invariants
    for (const auto& b : p.blocks) {
        if (b.instrs.empty()) add(b.id, "empty block", "");
        if (b.deadline && *b.deadline <= 0)
            add(b.id, "non-positive deadline", std::to_string(*b.deadline));
        if (b.load_qubits < 0) add(b.id, "negative load count", "");
        for (const auto& in : b.instrs) {
            bool ok = false;
            switch (b.type) {
                case BlockType::CL: ok = std::holds_alternative<ClassicalCompute>(in); break;
                case BlockType::CC:
                    ok = std::holds_alternative<SendMsg>(in) || std::holds_alternative<RecvMsg>(in);
                    break;
                case BlockType::QL:
                    ok = is_quantum_instr(in) && !std::holds_alternative<EprRequest>(in);
                    break;
                case BlockType::QC: ok = std::holds_alternative<EprRequest>(in); break;
            }
            if (!ok) add(b.id, "instruction kind not allowed in block type", to_string(b.type));
            if (const auto* c = std::get_if<ClassicalCompute>(&in)) {
                if (c->op_count <= 0) add(b.id, "non-positive op count", "");
            } else if (const auto* e = std::get_if<EprRequest>(&in)) {
                if (e->count <= 0) add(b.id, "non-positive EPR count", "");
                if (static_cast<int>(e->dest_qubits.size()) != e->count)
                    add(b.id, "EPR dest qubit count mismatch", "");
            }
        }
    }

    // precedence edges reference known blocks and respect block order
    bool order_ok = true;
    for (const auto& [from, to] : p.precedence) {
        if (!ids.count(from) || !ids.count(to)) {
            add(0, "precedence edge references unknown block",
                std::to_string(from) + "->" + std::to_string(to));
            order_ok = false;
            continue;
        }
        if (p.block_index(from) >= p.block_index(to)) {
            add(0, "linear order is not topological",
                std::to_string(from) + "->" + std::to_string(to));
            order_ok = false;
        }
    }
    // forward edges over a sequence are automatically acyclic

    // critical sections: contiguous, disjoint
    std::vector<std::pair<int, int>> cs_spans;
    for (const auto& cs : p.critical_sections) {
        int a = p.block_index(cs.first), b = p.block_index(cs.last);
        if (a < 0 || b < 0 || a > b) {
            add(cs.first, "invalid critical section range", "");
            continue;
        }
        cs_spans.emplace_back(a, b);
    }
    std::sort(cs_spans.begin(), cs_spans.end());
    for (size_t i = 1; i < cs_spans.size(); ++i)
        if (cs_spans[i].first <= cs_spans[i - 1].second)
            add(0, "overlapping critical sections", "");

    if (!order_ok) return rep;  // reachability needs a topological order

    auto reach = reachability(p);
    auto reaches = [&](int a, int b) { return reach[a][b]; };

    // variable def-use: every read must be preceded by a write in every
    // topological order, i.e. the def's block must reach the use's block
    // (or be earlier in the same block). Initialized variables are
    // defined up front.
    std::map<std::string, std::vector<std::pair<int, int>>> defs;  // var -> (blk,instr)
    for (const auto& [name, init] : p.variables)
        if (init) defs[name].push_back({-1, -1});
    for (size_t bi = 0; bi < p.blocks.size(); ++bi)
        for (size_t ii = 0; ii < p.blocks[bi].instrs.size(); ++ii)
            if (auto w = write_of(p.blocks[bi].instrs[ii]))
                defs[*w].push_back({static_cast<int>(bi), static_cast<int>(ii)});

    for (size_t bi = 0; bi < p.blocks.size(); ++bi) {
        for (size_t ii = 0; ii < p.blocks[bi].instrs.size(); ++ii) {
            std::vector<std::string> reads;
            collect_reads(p.blocks[bi].instrs[ii], reads);
            for (const auto& v : reads) {
                if (!p.variables.count(v)) {
                    add(p.blocks[bi].id, "undeclared variable", v);
                    continue;
                }
                bool found = false;
                for (auto [db, di] : defs[v]) {
                    if (db < 0 ||
                        (db == static_cast<int>(bi) && di < static_cast<int>(ii)) ||
                        (db != static_cast<int>(bi) && reaches(db, static_cast<int>(bi)))) {
                        found = true;
                        break;
                    }
                }
                if (!found) add(p.blocks[bi].id, "read before write", v);
            }
            if (auto w = write_of(p.blocks[bi].instrs[ii]); w && !p.variables.count(*w))
                add(p.blocks[bi].id, "undeclared variable", *w);
        }
    }

    // qubit lifetimes along the linear order (a valid topological order),
    // plus path-ordering between blocks so every topological order agrees
    std::map<QubitId, std::vector<QubitEvent>> qevents;
    for (size_t bi = 0; bi < p.blocks.size(); ++bi) {
        for (const auto& in : p.blocks[bi].instrs) {
            int i = static_cast<int>(bi);
            if (const auto* a = std::get_if<QAlloc>(&in)) {
                qevents[a->qubit].push_back({i, QubitEvent::Def});
            } else if (const auto* g = std::get_if<QGate>(&in)) {
                qevents[g->q0].push_back({i, QubitEvent::Use});
                if (is_two_qubit(g->gate)) qevents[g->q1].push_back({i, QubitEvent::Use});
            } else if (const auto* m = std::get_if<QMeasure>(&in)) {
                qevents[m->qubit].push_back({i, QubitEvent::Kill});
            } else if (const auto* f = std::get_if<QFree>(&in)) {
                qevents[f->qubit].push_back({i, QubitEvent::Kill});
            } else if (const auto* e = std::get_if<EprRequest>(&in)) {
                for (QubitId q : e->dest_qubits) qevents[q].push_back({i, QubitEvent::Def});
            }
        }
    }
    for (auto& [q, evs] : qevents) {
        bool live = false, ever = false;
        for (size_t k = 0; k < evs.size(); ++k) {
            const auto& ev = evs[k];
            BlockId bid = p.blocks[ev.block_idx].id;
            const char* dead_rule = ever ? "use after release" : "use before allocation";
            switch (ev.kind) {
                case QubitEvent::Def:
                    if (live) add(bid, "allocation of live qubit", "q" + std::to_string(q));
                    live = ever = true;
                    break;
                case QubitEvent::Use:
                case QubitEvent::Kill:
                    if (!live) add(bid, dead_rule, "q" + std::to_string(q));
                    if (ev.kind == QubitEvent::Kill) live = false;
                    break;
            }
            if (k > 0 && evs[k - 1].block_idx != ev.block_idx &&
                !reaches(evs[k - 1].block_idx, ev.block_idx))
                add(bid, "unordered qubit access", "q" + std::to_string(q));
        }
    }

    return rep;
}

std::set<BlockId> available_blocks(const Program& p, const std::set<BlockId>& completed) {
    auto preds = p.predecessors();
    for (BlockId c : completed) {
        auto it = preds.find(c);
        if (it == preds.end()) throw std::invalid_argument("unknown completed block");
        for (BlockId pr : it->second)
            if (!completed.count(pr))
                throw std::invalid_argument("completed set not downward-closed");
    }
    std::set<BlockId> out;
    for (const auto& b : p.blocks) {
        if (completed.count(b.id)) continue;
        bool ready = true;
        for (BlockId pr : preds[b.id])
            if (!completed.count(pr)) { ready = false; break; }
        if (ready) out.insert(b.id);
    }
    return out;
}

Duration estimate_block_duration(const Block& b, const TimingParams& timing,
                                 ExpectDeterministic expect) {
    if (!timing.valid()) throw std::invalid_argument("non-positive timing parameter");
    switch (b.type) {
        case BlockType::CL: {
            Duration d = 0;
            for (const auto& in : b.instrs)
                d += std::get<ClassicalCompute>(in).op_count * timing.classical_instr_ns;
            return d;
        }
        case BlockType::CC: {
            Duration d = 0;
            for (const auto& in : b.instrs) {
                d += timing.classical_instr_ns;
                if (std::holds_alternative<RecvMsg>(in)) d += timing.recv_proc_ns;
            }
            return d;
        }
        case BlockType::QL: {
            Duration d = static_cast<Duration>(b.load_qubits) * timing.quantum_instr_ns;
            for (const auto& in : b.instrs) {
                d += timing.quantum_instr_ns;
                if (const auto* g = std::get_if<QGate>(&in)) d += timing.gate_duration(g->gate);
            }
            return d;
        }
        case BlockType::QC:
            if (expect == ExpectDeterministic::Yes)
                throw std::runtime_error("stochastic block");
            return 0;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

const char* init_token(InitState s) {
    switch (s) {
        case InitState::PlusX: return "+X";
        case InitState::MinusX: return "-X";
        case InitState::PlusY: return "+Y";
        case InitState::MinusY: return "-Y";
        case InitState::PlusZ: return "+Z";
        case InitState::MinusZ: return "-Z";
        case InitState::Zero: return "0";
    }
    return "?";
}

std::optional<InitState> parse_init(const std::string& s) {
    if (s == "+X") return InitState::PlusX;
    if (s == "-X") return InitState::MinusX;
    if (s == "+Y") return InitState::PlusY;
    if (s == "-Y") return InitState::MinusY;
    if (s == "+Z") return InitState::PlusZ;
    if (s == "-Z") return InitState::MinusZ;
    if (s == "0") return InitState::Zero;
    return std::nullopt;
}

const char* basis_token(Basis b) {
    switch (b) {
        case Basis::X: return "X";
        case Basis::Y: return "Y";
        case Basis::Z: return "Z";
    }
    return "?";
}

std::optional<Basis> parse_basis(const std::string& s) {
    if (s == "X") return Basis::X;
    if (s == "Y") return Basis::Y;
    if (s == "Z") return Basis::Z;
    return std::nullopt;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

std::string qtok(QubitId q) { return "q" + std::to_string(q); }

QubitId parse_qubit(const std::string& t) {
    if (t.size() < 2 || t[0] != 'q') throw std::runtime_error("bad qubit token: " + t);
    return std::stoi(t.substr(1));
}

void emit_instr(std::ostream& os, const Instruction& in) {
    if (const auto* c = std::get_if<ClassicalCompute>(&in)) {
        os << "  compute " << c->op_count;
        if (c->dest) os << " " << *c->dest << " = " << c->expr.to_string();
    } else if (const auto* s = std::get_if<SendMsg>(&in)) {
        os << "  send " << s->peer << " " << s->payload;
    } else if (const auto* r = std::get_if<RecvMsg>(&in)) {
        os << "  recv " << r->peer << " " << r->dest;
    } else if (const auto* a = std::get_if<QAlloc>(&in)) {
        os << "  qalloc " << qtok(a->qubit) << " " << init_token(a->initial);
    } else if (const auto* g = std::get_if<QGate>(&in)) {
        os << "  " << to_string(g->gate) << " " << qtok(g->q0);
        if (is_two_qubit(g->gate)) os << " " << qtok(g->q1);
        if (is_rotation(g->gate)) os << " " << g->angle.to_string();
    } else if (const auto* m = std::get_if<QMeasure>(&in)) {
        os << "  qmeasure " << qtok(m->qubit) << " " << basis_token(m->basis) << " " << m->dest;
    } else if (const auto* f = std::get_if<QFree>(&in)) {
        os << "  qfree " << qtok(f->qubit);
    } else if (const auto* e = std::get_if<EprRequest>(&in)) {
        os << "  epr " << e->peer << " " << e->count;
        for (QubitId q : e->dest_qubits) os << " " << qtok(q);
    }
    os << "\n";
}

}  // namespace

std::string serialize(const Program& p) {
    std::ostringstream os;
    os << "PROGRAM " << p.name << " NODE " << p.node_role << "\n";
    for (const auto& [name, init] : p.variables) {
        os << "VAR " << name;
        if (init) os << " = " << fmt_double(*init);
        os << "\n";
    }
    for (const auto& [from, to] : p.precedence) os << "PREC " << from << " " << to << "\n";
    for (const auto& cs : p.critical_sections)
        os << "CRITSEC " << cs.first << " " << cs.last << "\n";
    for (const auto& ch : p.success_checks) {
        os << "CHECK " << ch.expected << " " << ch.constant;
        for (const auto& v : ch.vars) os << " " << v;
        os << "\n";
    }
    for (const auto& b : p.blocks) {
        os << "BLOCK " << b.id << " " << to_string(b.type);
        if (b.deadline) os << " deadline=" << *b.deadline;
        if (b.load_qubits > 0) os << " loads=" << b.load_qubits;
        os << "\n";
        for (const auto& in : b.instrs) emit_instr(os, in);
    }
    return os.str();
}

Program parse_program(const std::string& text) {
    Program p;
    std::istringstream is(text);
    std::string line;
    Block* cur = nullptr;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error("line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        const std::string& kw = toks[0];
        if (kw == "PROGRAM") {
            if (toks.size() != 4 || toks[2] != "NODE") fail("expected PROGRAM <name> NODE <role>");
            p.name = toks[1];
            p.node_role = toks[3];
        } else if (kw == "VAR") {
            if (toks.size() == 2) p.variables[toks[1]] = std::nullopt;
            else if (toks.size() == 4 && toks[2] == "=") p.variables[toks[1]] = std::stod(toks[3]);
            else fail("expected VAR <name> [= <value>]");
        } else if (kw == "PREC") {
            if (toks.size() != 3) fail("expected PREC <from> <to>");
            p.precedence.emplace_back(std::stoi(toks[1]), std::stoi(toks[2]));
        } else if (kw == "CRITSEC") {
            if (toks.size() != 3) fail("expected CRITSEC <first> <last>");
            p.critical_sections.push_back({std::stoi(toks[1]), std::stoi(toks[2])});
        } else if (kw == "CHECK") {
            if (toks.size() < 3) fail("expected CHECK <expected> <const> [vars...]");
            OutcomeCheck ch;
            ch.expected = std::stoi(toks[1]);
            ch.constant = std::stoi(toks[2]);
            ch.vars.assign(toks.begin() + 3, toks.end());
            p.success_checks.push_back(std::move(ch));
        } else if (kw == "BLOCK") {
            if (toks.size() < 3) fail("expected BLOCK <id> <type>");
            Block b;
            b.id = std::stoi(toks[1]);
            if (toks[2] == "CL") b.type = BlockType::CL;
            else if (toks[2] == "CC") b.type = BlockType::CC;
            else if (toks[2] == "QL") b.type = BlockType::QL;
            else if (toks[2] == "QC") b.type = BlockType::QC;
            else fail("unknown block type " + toks[2]);
            for (size_t i = 3; i < toks.size(); ++i) {
                if (toks[i].rfind("deadline=", 0) == 0)
                    b.deadline = std::stoll(toks[i].substr(9));
                else if (toks[i].rfind("loads=", 0) == 0)
                    b.load_qubits = std::stoi(toks[i].substr(6));
                else
                    fail("unknown block attribute " + toks[i]);
            }
            p.blocks.push_back(std::move(b));
            cur = &p.blocks.back();
        } else {
            if (!cur) fail("instruction outside block");
            auto expr_tail = [&](size_t n_fixed) -> std::string {
                // joins tokens after the fixed ones (expression may contain spaces)
                std::string s;
                for (size_t i = n_fixed; i < toks.size(); ++i) {
                    if (!s.empty()) s += " ";
                    s += toks[i];
                }
                return s;
            };
            if (kw == "compute") {
                if (toks.size() < 2) fail("expected compute <ops> [<var> = <expr>]");
                ClassicalCompute c;
                c.op_count = std::stoi(toks[1]);
                if (toks.size() > 2) {
                    if (toks.size() < 5 || toks[3] != "=") fail("expected <var> = <expr>");
                    c.dest = toks[2];
                    auto e = AngleExpr::parse(expr_tail(4));
                    if (!e) fail("bad expression");
                    c.expr = *e;
                }
                cur->instrs.emplace_back(std::move(c));
            } else if (kw == "send") {
                if (toks.size() != 3) fail("expected send <peer> <var>");
                cur->instrs.emplace_back(SendMsg{toks[1], toks[2]});
            } else if (kw == "recv") {
                if (toks.size() != 3) fail("expected recv <peer> <var>");
                cur->instrs.emplace_back(RecvMsg{toks[1], toks[2]});
            } else if (kw == "qalloc") {
                if (toks.size() != 3) fail("expected qalloc <q> <state>");
                auto st = parse_init(toks[2]);
                if (!st) fail("bad init state " + toks[2]);
                cur->instrs.emplace_back(QAlloc{parse_qubit(toks[1]), *st});
            } else if (kw == "qmeasure") {
                if (toks.size() != 4) fail("expected qmeasure <q> <basis> <var>");
                auto ba = parse_basis(toks[2]);
                if (!ba) fail("bad basis " + toks[2]);
                cur->instrs.emplace_back(QMeasure{parse_qubit(toks[1]), *ba, toks[3]});
            } else if (kw == "qfree") {
                if (toks.size() != 2) fail("expected qfree <q>");
                cur->instrs.emplace_back(QFree{parse_qubit(toks[1])});
            } else if (kw == "epr") {
                if (toks.size() < 4) fail("expected epr <peer> <count> <q>...");
                EprRequest e;
                e.peer = toks[1];
                e.count = std::stoi(toks[2]);
                for (size_t i = 3; i < toks.size(); ++i)
                    e.dest_qubits.push_back(parse_qubit(toks[i]));
                cur->instrs.emplace_back(std::move(e));
            } else if (kw == "x" || kw == "z" || kw == "h") {
                if (toks.size() != 2) fail("expected " + kw + " <q>");
                GateKind g = kw == "x" ? GateKind::X : kw == "z" ? GateKind::Z : GateKind::H;
                cur->instrs.emplace_back(QGate{g, parse_qubit(toks[1])});
            } else if (kw == "rx" || kw == "ry" || kw == "rz") {
                if (toks.size() < 3) fail("expected " + kw + " <q> <expr>");
                GateKind g = kw == "rx" ? GateKind::RX : kw == "ry" ? GateKind::RY : GateKind::RZ;
                auto e = AngleExpr::parse(expr_tail(2));
                if (!e) fail("bad expression");
                cur->instrs.emplace_back(QGate{g, parse_qubit(toks[1]), -1, *e});
            } else if (kw == "cz") {
                if (toks.size() != 3) fail("expected cz <q> <q>");
                cur->instrs.emplace_back(
                    QGate{GateKind::CZ, parse_qubit(toks[1]), parse_qubit(toks[2])});
            } else {
                fail("unknown instruction " + kw);
            }
        }
    }
    return p;
}

Program load_program(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_program(ss.str());
}

void save_program(const Program& p, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << serialize(p);
}

}  // namespace qnp
