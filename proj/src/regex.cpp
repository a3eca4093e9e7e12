// SPDX-License-Identifier: Apache-2.0
#include <logrules/regex.hpp>

#include <algorithm>
#include <array>
#include <bitset>
#include <cctype>
#include <map>
#include <memory>

namespace logrules
{

RegexError::RegexError(Kind kind, std::size_t offset, const std::string& message):
    std::runtime_error(message), _kind(kind), _offset(offset)
{
}

namespace
{

constexpr int kMaxRepeat = 1000;
constexpr std::size_t kMaxProgram = 20000;
constexpr int kMaxNesting = 64;
constexpr std::size_t kMaxDfaStates = 2000;

using ByteSet = std::bitset<256>;

bool is_word_byte(unsigned char c)
{
    return std::isalnum(c) != 0 || c == '_';
}

// ---------------------------------------------------------------------------
// Parse tree

struct Node
{
    enum class Kind
    {
        Empty,
        Bytes,
        Concat,
        Alternate,
        Repeat,
        Group,
        Begin,
        End,
        WordBoundary,
        NotWordBoundary,
    };

    Kind kind = Kind::Empty;
    ByteSet bytes;
    std::vector<std::unique_ptr<Node>> children;
    int min = 0;
    int max = -1; // -1: unbounded
    bool greedy = true;
    int capture = -1;
};

using NodePtr = std::unique_ptr<Node>;

NodePtr make_node(Node::Kind kind)
{
    auto node = std::make_unique<Node>();
    node->kind = kind;
    return node;
}

NodePtr make_bytes(const ByteSet& set)
{
    auto node = make_node(Node::Kind::Bytes);
    node->bytes = set;
    return node;
}

ByteSet single(unsigned char c)
{
    auto set = ByteSet {};
    set.set(c);
    return set;
}

ByteSet digit_set()
{
    auto set = ByteSet {};
    for (int c = '0'; c <= '9'; ++c)
        set.set(static_cast<std::size_t>(c));
    return set;
}

ByteSet word_set()
{
    auto set = ByteSet {};
    for (int c = 0; c < 256; ++c)
        if (is_word_byte(static_cast<unsigned char>(c)))
            set.set(static_cast<std::size_t>(c));
    return set;
}

ByteSet space_set()
{
    auto set = ByteSet {};
    for (char c: std::string_view(" \t\n\r\f\v"))
        set.set(static_cast<unsigned char>(c));
    return set;
}

class Parser
{
  public:
    explicit Parser(std::string_view pattern): _pattern(pattern) {}

    NodePtr parse()
    {
        auto node = parse_alternation(0);
        if (_pos < _pattern.size())
            fail_syntax(_pos, "unmatched ')'");
        return node;
    }

    [[nodiscard]] int captures() const noexcept { return _captures; }

  private:
    [[noreturn]] static void fail_syntax(std::size_t at, const std::string& message)
    {
        throw RegexError(RegexError::Kind::Syntax, at, message);
    }

    [[noreturn]] static void fail_unsupported(std::size_t at, const std::string& message)
    {
        throw RegexError(RegexError::Kind::Unsupported, at, message);
    }

    [[nodiscard]] bool at_end() const { return _pos >= _pattern.size(); }
    [[nodiscard]] char peek() const { return _pattern[_pos]; }

    NodePtr parse_alternation(int depth)
    {
        if (depth > kMaxNesting)
            fail_syntax(_pos, "groups nested too deeply");
        auto first = parse_concat(depth);
        if (at_end() || peek() != '|')
            return first;
        auto alt = make_node(Node::Kind::Alternate);
        alt->children.push_back(std::move(first));
        while (!at_end() && peek() == '|')
        {
            ++_pos;
            alt->children.push_back(parse_concat(depth));
        }
        return alt;
    }

    NodePtr parse_concat(int depth)
    {
        auto concat = make_node(Node::Kind::Concat);
        while (!at_end() && peek() != '|' && peek() != ')')
            concat->children.push_back(parse_repeat(depth));
        if (concat->children.empty())
            return make_node(Node::Kind::Empty);
        if (concat->children.size() == 1)
            return std::move(concat->children.front());
        return concat;
    }

    bool parse_braces(int& min, int& max)
    {
        // At '{'. Returns false (and leaves _pos) if this is not a quantifier.
        auto const start = _pos;
        std::size_t i = _pos + 1;
        auto read_int = [&](int& value) {
            auto const begin = i;
            long long acc = 0;
            while (i < _pattern.size() && std::isdigit(static_cast<unsigned char>(_pattern[i])))
            {
                acc = acc * 10 + (_pattern[i] - '0');
                if (acc > kMaxRepeat)
                    fail_unsupported(start, "repetition count exceeds " + std::to_string(kMaxRepeat));
                ++i;
            }
            value = static_cast<int>(acc);
            return i > begin;
        };
        if (!read_int(min))
            return false;
        if (i < _pattern.size() && _pattern[i] == '}')
        {
            max = min;
        }
        else if (i < _pattern.size() && _pattern[i] == ',')
        {
            ++i;
            if (i < _pattern.size() && _pattern[i] == '}')
                max = -1;
            else if (!read_int(max) || i >= _pattern.size() || _pattern[i] != '}')
                return false;
        }
        else
        {
            return false;
        }
        if (max != -1 && max < min)
            fail_syntax(start, "repetition range out of order");
        _pos = i + 1;
        return true;
    }

    NodePtr parse_repeat(int depth)
    {
        auto const atom_start = _pos;
        auto atom = parse_atom(depth);
        bool quantified = false;
        while (!at_end())
        {
            int min = 0;
            int max = -1;
            auto const q = peek();
            auto const q_pos = _pos;
            if (q == '*')
            {
                ++_pos;
            }
            else if (q == '+')
            {
                min = 1;
                ++_pos;
            }
            else if (q == '?')
            {
                max = 1;
                ++_pos;
            }
            else if (q == '{')
            {
                if (!parse_braces(min, max))
                    break;
            }
            else
            {
                break;
            }

            if (quantified)
                fail_syntax(q_pos, "nested quantifier");
            switch (atom->kind)
            {
                case Node::Kind::Begin:
                case Node::Kind::End:
                case Node::Kind::WordBoundary:
                case Node::Kind::NotWordBoundary:
                    fail_syntax(atom_start, "nothing to repeat");
                default: break;
            }
            auto repeat = make_node(Node::Kind::Repeat);
            repeat->min = min;
            repeat->max = max;
            if (!at_end() && peek() == '?')
            {
                repeat->greedy = false;
                ++_pos;
            }
            repeat->children.push_back(std::move(atom));
            atom = std::move(repeat);
            quantified = true;
        }
        return atom;
    }

    NodePtr parse_group(int depth)
    {
        auto const open = _pos;
        ++_pos; // '('
        int capture = -1;
        if (!at_end() && peek() == '?')
        {
            auto const rest = _pattern.substr(_pos);
            if (rest.starts_with("?:"))
                _pos += 2;
            else if (rest.starts_with("?=") || rest.starts_with("?!"))
                fail_unsupported(open, "lookahead is not supported");
            else if (rest.starts_with("?<=") || rest.starts_with("?<!"))
                fail_unsupported(open, "lookbehind is not supported");
            else if (rest.starts_with("?<") || rest.starts_with("?P"))
                fail_unsupported(open, "named groups are not supported");
            else
                fail_unsupported(open, "inline flags are not supported");
        }
        else
        {
            capture = ++_captures;
        }
        auto inner = parse_alternation(depth + 1);
        if (at_end() || peek() != ')')
            fail_syntax(open, "missing ')'");
        ++_pos;
        auto group = make_node(Node::Kind::Group);
        group->capture = capture;
        group->children.push_back(std::move(inner));
        return group;
    }

    // Escape after the backslash; returns the byte set, or sets `assertion`.
    ByteSet parse_escape(std::size_t backslash, bool in_class, Node::Kind* assertion)
    {
        if (at_end())
            fail_syntax(backslash, "trailing backslash");
        auto const c = static_cast<unsigned char>(peek());
        ++_pos;
        switch (c)
        {
            case 'd': return digit_set();
            case 'D': return ~digit_set();
            case 'w': return word_set();
            case 'W': return ~word_set();
            case 's': return space_set();
            case 'S': return ~space_set();
            case 't': return single('\t');
            case 'n': return single('\n');
            case 'r': return single('\r');
            case 'f': return single('\f');
            case 'v': return single('\v');
            case 'x':
            {
                auto hex = [&](std::size_t at) {
                    if (at >= _pattern.size() || !std::isxdigit(static_cast<unsigned char>(_pattern[at])))
                        fail_syntax(backslash, "malformed \\x escape");
                    auto const h = static_cast<unsigned char>(_pattern[at]);
                    return std::isdigit(h) ? h - '0' : (std::tolower(h) - 'a' + 10);
                };
                auto const value = hex(_pos) * 16 + hex(_pos + 1);
                _pos += 2;
                return single(static_cast<unsigned char>(value));
            }
            case 'b':
            case 'B':
                if (in_class || assertion == nullptr)
                    fail_unsupported(backslash, "\\b inside a character class is not supported");
                *assertion = c == 'b' ? Node::Kind::WordBoundary : Node::Kind::NotWordBoundary;
                return {};
            default: break;
        }
        if (c >= '1' && c <= '9')
            fail_unsupported(backslash, "backreferences are not supported");
        if (std::isalnum(c))
            fail_unsupported(backslash, std::string("unsupported escape \\") + static_cast<char>(c));
        return single(c);
    }

    NodePtr parse_class()
    {
        auto const open = _pos;
        ++_pos; // '['
        bool negate = false;
        if (!at_end() && peek() == '^')
        {
            negate = true;
            ++_pos;
        }
        auto set = ByteSet {};
        bool first = true;
        while (true)
        {
            if (at_end())
                fail_syntax(open, "missing ']'");
            if (peek() == ']' && !first)
            {
                ++_pos;
                break;
            }
            first = false;

            auto read_item = [&](bool& is_single, unsigned char& value) -> ByteSet {
                auto const at = _pos;
                auto const c = static_cast<unsigned char>(peek());
                ++_pos;
                if (c == '\\')
                {
                    auto item = parse_escape(at, true, nullptr);
                    is_single = item.count() == 1;
                    if (is_single)
                        for (int b = 0; b < 256; ++b)
                            if (item.test(static_cast<std::size_t>(b)))
                                value = static_cast<unsigned char>(b);
                    return item;
                }
                is_single = true;
                value = c;
                return single(c);
            };

            bool lo_single = false;
            unsigned char lo = 0;
            auto item = read_item(lo_single, lo);
            if (lo_single && _pos + 1 < _pattern.size() && peek() == '-' && _pattern[_pos + 1] != ']')
            {
                auto const dash = _pos;
                ++_pos;
                bool hi_single = false;
                unsigned char hi = 0;
                (void) read_item(hi_single, hi);
                if (!hi_single)
                    fail_syntax(dash, "invalid class range");
                if (hi < lo)
                    fail_syntax(dash, "class range out of order");
                for (int b = lo; b <= hi; ++b)
                    set.set(static_cast<std::size_t>(b));
            }
            else
            {
                set |= item;
            }
        }
        if (negate)
            set = ~set;
        return make_bytes(set);
    }

    NodePtr parse_atom(int depth)
    {
        auto const c = peek();
        switch (c)
        {
            case '(': return parse_group(depth);
            case '[': return parse_class();
            case '.':
            {
                ++_pos;
                auto set = ByteSet {}.set();
                set.reset('\n');
                return make_bytes(set);
            }
            case '^': ++_pos; return make_node(Node::Kind::Begin);
            case '$': ++_pos; return make_node(Node::Kind::End);
            case '*':
            case '+':
            case '?': fail_syntax(_pos, "nothing to repeat");
            case '\\':
            {
                auto const at = _pos;
                ++_pos;
                auto assertion = Node::Kind::Empty;
                auto set = parse_escape(at, false, &assertion);
                if (assertion != Node::Kind::Empty)
                    return make_node(assertion);
                return make_bytes(set);
            }
            default: ++_pos; return make_bytes(single(static_cast<unsigned char>(c)));
        }
    }

    std::string_view _pattern;
    std::size_t _pos = 0;
    int _captures = 0;
};

// ---------------------------------------------------------------------------
// Program

enum class Op : std::uint8_t
{
    Consume,
    Split,
    Jmp,
    Save,
    Begin,
    End,
    Word,
    NotWord,
    Match,
};

struct Inst
{
    Op op = Op::Match;
    int x = 0;
    int y = 0;
};

class Compiler
{
  public:
    std::vector<Inst> insts;
    std::vector<ByteSet> sets;

    void emit_program(const Node& root)
    {
        emit(Inst { Op::Save, 0, 0 });
        compile(root);
        emit(Inst { Op::Save, 1, 0 });
        emit(Inst { Op::Match, 0, 0 });
    }

  private:
    int emit(Inst inst)
    {
        if (insts.size() >= kMaxProgram)
            throw RegexError(RegexError::Kind::Unsupported, 0, "pattern expands to too many instructions");
        insts.push_back(inst);
        return static_cast<int>(insts.size() - 1);
    }

    int set_index(const ByteSet& set)
    {
        for (std::size_t i = 0; i < sets.size(); ++i)
            if (sets[i] == set)
                return static_cast<int>(i);
        sets.push_back(set);
        return static_cast<int>(sets.size() - 1);
    }

    [[nodiscard]] int here() const { return static_cast<int>(insts.size()); }

    void compile(const Node& node)
    {
        switch (node.kind)
        {
            case Node::Kind::Empty: break;
            case Node::Kind::Bytes: emit(Inst { Op::Consume, set_index(node.bytes), 0 }); break;
            case Node::Kind::Concat:
                for (auto const& child: node.children)
                    compile(*child);
                break;
            case Node::Kind::Alternate:
            {
                auto jumps = std::vector<int> {};
                for (std::size_t i = 0; i < node.children.size(); ++i)
                {
                    if (i + 1 < node.children.size())
                    {
                        auto const split = emit(Inst { Op::Split, 0, 0 });
                        insts[static_cast<std::size_t>(split)].x = here();
                        compile(*node.children[i]);
                        jumps.push_back(emit(Inst { Op::Jmp, 0, 0 }));
                        insts[static_cast<std::size_t>(split)].y = here();
                    }
                    else
                    {
                        compile(*node.children[i]);
                    }
                }
                for (auto j: jumps)
                    insts[static_cast<std::size_t>(j)].x = here();
                break;
            }
            case Node::Kind::Group:
                if (node.capture >= 0)
                    emit(Inst { Op::Save, 2 * node.capture, 0 });
                compile(*node.children.front());
                if (node.capture >= 0)
                    emit(Inst { Op::Save, 2 * node.capture + 1, 0 });
                break;
            case Node::Kind::Repeat: compile_repeat(node); break;
            case Node::Kind::Begin: emit(Inst { Op::Begin, 0, 0 }); break;
            case Node::Kind::End: emit(Inst { Op::End, 0, 0 }); break;
            case Node::Kind::WordBoundary: emit(Inst { Op::Word, 0, 0 }); break;
            case Node::Kind::NotWordBoundary: emit(Inst { Op::NotWord, 0, 0 }); break;
        }
    }

    void prefer(int split, int body, int out, bool greedy)
    {
        auto& inst = insts[static_cast<std::size_t>(split)];
        inst.x = greedy ? body : out;
        inst.y = greedy ? out : body;
    }

    void compile_repeat(const Node& node)
    {
        auto const& body = *node.children.front();
        for (int i = 0; i < node.min; ++i)
            compile(body);
        if (node.max == -1)
        {
            auto const loop = emit(Inst { Op::Split, 0, 0 });
            auto const body_start = here();
            compile(body);
            emit(Inst { Op::Jmp, loop, 0 });
            prefer(loop, body_start, here(), node.greedy);
            return;
        }
        auto splits = std::vector<int> {};
        for (int i = node.min; i < node.max; ++i)
        {
            auto const split = emit(Inst { Op::Split, 0, 0 });
            splits.push_back(split);
            insts[static_cast<std::size_t>(split)].x = here();
            compile(body);
        }
        for (auto split: splits)
            prefer(split, split + 1, here(), node.greedy);
    }
};

// Longest run of bytes that every match must contain, in order.
void collect_literals(const Node& node, std::string& run, std::string& best)
{
    auto flush = [&] {
        if (run.size() > best.size())
            best = run;
        run.clear();
    };
    switch (node.kind)
    {
        case Node::Kind::Bytes:
            if (node.bytes.count() == 1)
            {
                for (std::size_t b = 0; b < 256; ++b)
                    if (node.bytes.test(b))
                        run.push_back(static_cast<char>(b));
            }
            else
            {
                flush();
            }
            break;
        case Node::Kind::Concat:
            for (auto const& child: node.children)
                collect_literals(*child, run, best);
            break;
        case Node::Kind::Group: collect_literals(*node.children.front(), run, best); break;
        case Node::Kind::Repeat:
            flush();
            if (node.min >= 1)
            {
                collect_literals(*node.children.front(), run, best);
                flush();
            }
            break;
        case Node::Kind::Empty:
        case Node::Kind::Begin:
        case Node::Kind::End:
        case Node::Kind::WordBoundary:
        case Node::Kind::NotWordBoundary: break;
        case Node::Kind::Alternate: flush(); break;
    }
}

} // namespace

// ---------------------------------------------------------------------------

struct Regex::Program
{
    std::string source;
    std::vector<Inst> insts;
    std::vector<ByteSet> sets;
    int captures = 0;
    std::string literal;

    // DFA for existence checks; empty `accept` means no DFA.
    std::array<std::uint16_t, 256> byte_class {};
    std::size_t classes = 0;
    std::vector<std::int32_t> transitions;
    std::vector<std::uint8_t> accept;
    std::vector<std::uint8_t> accept_at_end;

    void build_dfa();
    [[nodiscard]] bool dfa_search(std::string_view text) const;
    bool pike(std::string_view text, RegexMatch* match) const;
};

namespace
{

class SparseSet
{
  public:
    explicit SparseSet(std::size_t n): _dense(n), _sparse(n) {}

    bool contains(int v) const
    {
        auto const s = _sparse[static_cast<std::size_t>(v)];
        return s < _size && _dense[s] == v;
    }

    void insert(int v)
    {
        _sparse[static_cast<std::size_t>(v)] = _size;
        _dense[_size++] = v;
    }

    void clear() { _size = 0; }
    [[nodiscard]] std::size_t size() const { return _size; }
    int operator[](std::size_t i) const { return _dense[i]; }

  private:
    std::vector<int> _dense;
    std::vector<std::size_t> _sparse;
    std::size_t _size = 0;
};

} // namespace

void Regex::Program::build_dfa()
{
    for (auto const& inst: insts)
        if (inst.op == Op::Word || inst.op == Op::NotWord)
            return;

    // Byte equivalence classes: bytes indistinguishable by every set.
    {
        auto ids = std::array<std::uint32_t, 256> {};
        for (auto const& set: sets)
        {
            auto remap = std::map<std::pair<std::uint32_t, bool>, std::uint32_t> {};
            for (std::size_t b = 0; b < 256; ++b)
            {
                auto key = std::make_pair(ids[b], set.test(b));
                auto [it, inserted] = remap.try_emplace(key, static_cast<std::uint32_t>(remap.size()));
                ids[b] = it->second;
            }
        }
        std::uint32_t max_id = 0;
        for (std::size_t b = 0; b < 256; ++b)
        {
            byte_class[b] = static_cast<std::uint16_t>(ids[b]);
            max_id = std::max(max_id, ids[b]);
        }
        classes = max_id + 1;
    }

    auto const n = insts.size();
    auto marks = SparseSet(n);
    auto stack = std::vector<int> {};

    // Kernel pcs: Consume, Match, and End assertions still waiting for end of input.
    auto closure = [&](std::vector<int>& out, int start, bool at_begin, bool at_end) {
        stack.push_back(start);
        while (!stack.empty())
        {
            auto pc = stack.back();
            stack.pop_back();
            if (marks.contains(pc))
                continue;
            marks.insert(pc);
            auto const& inst = insts[static_cast<std::size_t>(pc)];
            switch (inst.op)
            {
                case Op::Jmp: stack.push_back(inst.x); break;
                case Op::Split:
                    stack.push_back(inst.y);
                    stack.push_back(inst.x);
                    break;
                case Op::Save: stack.push_back(pc + 1); break;
                case Op::Begin:
                    if (at_begin)
                        stack.push_back(pc + 1);
                    break;
                case Op::End:
                    if (at_end)
                        stack.push_back(pc + 1);
                    else
                        out.push_back(pc);
                    break;
                case Op::Consume:
                case Op::Match: out.push_back(pc); break;
                case Op::Word:
                case Op::NotWord: break;
            }
        }
    };

    auto has_match = [&](const std::vector<int>& pcs) {
        return std::any_of(pcs.begin(), pcs.end(), [&](int pc) {
            return pc >= 0 && insts[static_cast<std::size_t>(pc)].op == Op::Match;
        });
    };

    auto restart = std::vector<int> {};
    marks.clear();
    closure(restart, 0, false, false);

    // Key: sorted kernel, prefixed with -1 for the initial state.
    auto index = std::map<std::vector<int>, std::int32_t> {};
    auto states = std::vector<std::vector<int>> {};
    auto intern = [&](std::vector<int> key) -> std::int32_t {
        std::sort(key.begin(), key.end());
        key.erase(std::unique(key.begin(), key.end()), key.end());
        auto [it, inserted] = index.try_emplace(key, static_cast<std::int32_t>(states.size()));
        if (inserted)
            states.push_back(std::move(key));
        return it->second;
    };

    {
        auto initial = std::vector<int> {};
        marks.clear();
        closure(initial, 0, true, false);
        initial.push_back(-1);
        intern(std::move(initial));
    }

    for (std::size_t s = 0; s < states.size(); ++s)
    {
        if (states.size() > kMaxDfaStates)
        {
            transitions.clear();
            accept.clear();
            accept_at_end.clear();
            return;
        }
        auto const kernel = states[s]; // copy: `states` may grow
        bool const initial = !kernel.empty() && kernel.front() == -1;
        auto const matched = has_match(kernel);

        bool end_ok = matched;
        for (auto pc: kernel)
        {
            if (pc < 0 || insts[static_cast<std::size_t>(pc)].op != Op::End || end_ok)
                continue;
            auto tail = std::vector<int> {};
            marks.clear();
            closure(tail, pc + 1, initial, true);
            end_ok = has_match(tail);
        }
        accept.push_back(matched ? 1 : 0);
        accept_at_end.push_back(end_ok ? 1 : 0);
        transitions.resize((s + 1) * classes, static_cast<std::int32_t>(s));
        if (matched)
            continue;

        for (std::size_t cls = 0; cls < classes; ++cls)
        {
            std::size_t representative = 0;
            while (byte_class[representative] != cls)
                ++representative;

            auto next = restart;
            marks.clear();
            for (auto pc: kernel)
            {
                if (pc < 0)
                    continue;
                auto const& inst = insts[static_cast<std::size_t>(pc)];
                if (inst.op == Op::Consume && sets[static_cast<std::size_t>(inst.x)].test(representative))
                    closure(next, pc + 1, false, false);
            }
            transitions[s * classes + cls] = intern(std::move(next));
        }
    }
}

bool Regex::Program::dfa_search(std::string_view text) const
{
    std::int32_t state = 0;
    auto const* table = transitions.data();
    auto const* accepting = accept.data();
    for (char ch: text)
    {
        if (accepting[state])
            return true;
        state = table[static_cast<std::size_t>(state) * classes + byte_class[static_cast<unsigned char>(ch)]];
    }
    return accepting[state] || accept_at_end[static_cast<std::size_t>(state)];
}

bool Regex::Program::pike(std::string_view text, RegexMatch* match) const
{
    auto const n = insts.size();
    auto const slots = match != nullptr ? static_cast<std::size_t>(2 * (captures + 1)) : 0;

    struct ThreadList
    {
        SparseSet visited;
        std::vector<int> pcs;  // Consume/Match threads, highest priority first
        std::vector<int> caps; // `slots` entries per thread
        explicit ThreadList(std::size_t size): visited(size) {}
        void clear()
        {
            visited.clear();
            pcs.clear();
            caps.clear();
        }
    };
    auto clist = ThreadList(n);
    auto nlist = ThreadList(n);

    struct Frame
    {
        int pc;
        int slot; // >= 0: restore caps[slot] = value
        int value;
    };
    auto stack = std::vector<Frame> {};
    auto caps = std::vector<int>(slots, -1);

    auto add_thread = [&](ThreadList& list, int start, std::size_t pos) {
        stack.push_back(Frame { start, -1, 0 });
        while (!stack.empty())
        {
            auto const frame = stack.back();
            stack.pop_back();
            if (frame.slot >= 0)
            {
                caps[static_cast<std::size_t>(frame.slot)] = frame.value;
                continue;
            }
            auto pc = frame.pc;
            bool follow = true;
            while (follow && !list.visited.contains(pc))
            {
                list.visited.insert(pc);
                auto const& inst = insts[static_cast<std::size_t>(pc)];
                switch (inst.op)
                {
                    case Op::Jmp: pc = inst.x; break;
                    case Op::Split:
                        stack.push_back(Frame { inst.y, -1, 0 });
                        pc = inst.x;
                        break;
                    case Op::Save:
                        if (static_cast<std::size_t>(inst.x) < slots)
                        {
                            stack.push_back(Frame { 0, inst.x, caps[static_cast<std::size_t>(inst.x)] });
                            caps[static_cast<std::size_t>(inst.x)] = static_cast<int>(pos);
                        }
                        ++pc;
                        break;
                    case Op::Begin:
                        follow = pos == 0;
                        ++pc;
                        break;
                    case Op::End:
                        follow = pos == text.size();
                        ++pc;
                        break;
                    case Op::Word:
                    case Op::NotWord:
                    {
                        bool const before = pos > 0 && is_word_byte(static_cast<unsigned char>(text[pos - 1]));
                        bool const after =
                            pos < text.size() && is_word_byte(static_cast<unsigned char>(text[pos]));
                        follow = (before != after) == (inst.op == Op::Word);
                        ++pc;
                        break;
                    }
                    case Op::Consume:
                    case Op::Match:
                        list.pcs.push_back(pc);
                        list.caps.insert(list.caps.end(), caps.begin(), caps.end());
                        follow = false;
                        break;
                }
            }
        }
    };

    bool matched = false;
    for (std::size_t pos = 0; pos <= text.size(); ++pos)
    {
        if (!matched)
        {
            std::fill(caps.begin(), caps.end(), -1);
            add_thread(clist, 0, pos);
        }
        if (matched && clist.pcs.empty())
            break;

        for (std::size_t i = 0; i < clist.pcs.size(); ++i)
        {
            auto const& inst = insts[static_cast<std::size_t>(clist.pcs[i])];
            if (inst.op == Op::Consume)
            {
                if (pos < text.size()
                    && sets[static_cast<std::size_t>(inst.x)].test(static_cast<unsigned char>(text[pos])))
                {
                    std::copy_n(clist.caps.begin() + static_cast<std::ptrdiff_t>(i * slots), slots, caps.begin());
                    add_thread(nlist, clist.pcs[i] + 1, pos + 1);
                }
                continue;
            }
            // Match: record it and cut every lower-priority thread.
            matched = true;
            if (match == nullptr)
                return true;
            match->groups.assign(static_cast<std::size_t>(captures + 1), std::nullopt);
            for (std::size_t g = 0; g <= static_cast<std::size_t>(captures); ++g)
            {
                auto const begin = clist.caps[i * slots + 2 * g];
                auto const end = clist.caps[i * slots + 2 * g + 1];
                if (begin >= 0 && end >= begin)
                    match->groups[g] =
                        text.substr(static_cast<std::size_t>(begin), static_cast<std::size_t>(end - begin));
            }
            break;
        }
        std::swap(clist, nlist);
        nlist.clear();
    }
    return matched;
}

Regex::Regex(std::shared_ptr<const Program> program): _program(std::move(program)) {}

Regex Regex::compile(std::string_view pattern)
{
    auto parser = Parser(pattern);
    auto root = parser.parse();

    auto compiler = Compiler {};
    compiler.emit_program(*root);

    auto program = std::make_shared<Program>();
    program->source = std::string(pattern);
    program->insts = std::move(compiler.insts);
    program->sets = std::move(compiler.sets);
    program->captures = parser.captures();

    auto run = std::string {};
    collect_literals(*root, run, program->literal);
    if (run.size() > program->literal.size())
        program->literal = run;

    program->build_dfa();
    return Regex(std::move(program));
}

const std::string& Regex::source() const noexcept
{
    return _program->source;
}

std::size_t Regex::capture_count() const noexcept
{
    return static_cast<std::size_t>(_program->captures);
}

bool Regex::has_dfa() const noexcept
{
    return !_program->accept.empty();
}

const std::string& Regex::required_literal() const noexcept
{
    return _program->literal;
}

bool Regex::search(std::string_view text) const
{
    auto const& p = *_program;
    if (!p.literal.empty() && text.find(p.literal) == std::string_view::npos)
        return false;
    if (!p.accept.empty())
        return p.dfa_search(text);
    return p.pike(text, nullptr);
}

bool Regex::search_nfa(std::string_view text) const
{
    return _program->pike(text, nullptr);
}

std::optional<RegexMatch> Regex::find(std::string_view text) const
{
    if (!search(text))
        return std::nullopt;
    auto match = RegexMatch {};
    if (!_program->pike(text, &match))
        return std::nullopt;
    return match;
}

} // namespace logrules
