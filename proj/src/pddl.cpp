#include "aplan/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "aplan/tree.hpp"

namespace aplan::pddl {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool iequals(const std::string& a, const std::string& b) { return lower(a) == lower(b); }

// ---------------------------------------------------------------------------
// Lexer

struct Token {
    enum class Kind { LParen, RParen, Atom, End };
    Kind kind = Kind::End;
    std::string text;
    int line = 1;
    int column = 1;
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_space_and_comments();
        Token token;
        token.line = line_;
        token.column = column_;
        if (pos_ >= text_.size()) {
            token.kind = Token::Kind::End;
            return token;
        }
        char c = text_[pos_];
        if (c == '(') {
            advance();
            token.kind = Token::Kind::LParen;
            return token;
        }
        if (c == ')') {
            advance();
            token.kind = Token::Kind::RParen;
            return token;
        }
        token.kind = Token::Kind::Atom;
        std::string atom;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
            atom.push_back(text_[pos_]);
            advance();
        }
        token.text = std::move(atom);
        return token;
    }

  private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_space_and_comments() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

bool is_number(const std::string& text) {
    if (text.empty()) return false;
    std::size_t i = text[0] == '-' ? 1 : 0;
    if (i == text.size()) return false;
    bool digit = false;
    bool dot = false;
    for (; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            digit = true;
        } else if (text[i] == '.' && !dot) {
            dot = true;
        } else {
            return false;
        }
    }
    return digit;
}

class Parser {
  public:
    explicit Parser(const std::string& text) : lexer_(text) { token_ = lexer_.next(); }

    SExpr parse_expr() {
        if (token_.kind == Token::Kind::End) {
            throw ParseError("unexpected end of input", token_.line, token_.column);
        }
        if (token_.kind == Token::Kind::RParen) {
            throw ParseError("unbalanced ')'", token_.line, token_.column);
        }
        if (token_.kind == Token::Kind::LParen) {
            SExpr list;
            list.kind = SExpr::Kind::List;
            list.line = token_.line;
            list.column = token_.column;
            consume();
            while (token_.kind != Token::Kind::RParen) {
                if (token_.kind == Token::Kind::End) {
                    throw ParseError("unbalanced '('", list.line, list.column);
                }
                list.items.push_back(parse_expr());
            }
            consume();  // ')'
            return list;
        }
        SExpr atom;
        atom.line = token_.line;
        atom.column = token_.column;
        atom.text = token_.text;
        if (is_number(token_.text)) {
            atom.kind = SExpr::Kind::Number;
            atom.number = std::stod(token_.text);
        } else if (token_.text[0] == ':') {
            atom.kind = SExpr::Kind::Keyword;
        } else if (token_.text[0] == '?') {
            atom.kind = SExpr::Kind::Variable;
        } else {
            atom.kind = SExpr::Kind::Symbol;
        }
        consume();
        return atom;
    }

    void expect_end() {
        if (token_.kind != Token::Kind::End) {
            throw ParseError("trailing content after top-level form", token_.line, token_.column);
        }
    }

  private:
    void consume() { token_ = lexer_.next(); }

    Lexer lexer_;
    Token token_;
};

[[noreturn]] void fail(const SExpr& at, const std::string& message) {
    throw ParseError(message, at.line, at.column);
}

// name+ - type groups; `require_types` makes a missing type an error
std::vector<TypedName> parse_typed_names(const SExpr& list, bool require_types,
                                         SExpr::Kind name_kind) {
    std::vector<TypedName> out;
    std::size_t group_start = 0;
    std::size_t i = 0;
    while (i < list.items.size()) {
        const SExpr& item = list.items[i];
        if (item.kind == SExpr::Kind::Symbol && item.text == "-") {
            if (i + 1 >= list.items.size()) fail(item, "dangling '-' in typed list");
            const SExpr& type = list.items[i + 1];
            if (type.kind != SExpr::Kind::Symbol) fail(type, "expected type name");
            for (std::size_t k = group_start; k < out.size(); ++k) out[k].type = type.text;
            group_start = out.size();
            i += 2;
            continue;
        }
        if (item.kind != name_kind) fail(item, "unexpected token in typed list");
        out.push_back({item.text, ""});
        ++i;
    }
    if (require_types) {
        for (const TypedName& name : out) {
            if (name.type.empty()) fail(list, "untyped parameter " + name.name);
        }
    }
    return out;
}

// Supported connectives. Flattens nested (and ...); keeps (exists ...)
// conjuncts whole; collects plain atoms.
void flatten_condition(const SExpr& expr, std::vector<SExpr>& atoms) {
    if (expr.kind != SExpr::Kind::List || expr.items.empty()) {
        fail(expr, "expected a condition");
    }
    const SExpr& head = expr.items[0];
    if (head.kind == SExpr::Kind::Symbol && iequals(head.text, "and")) {
        for (std::size_t i = 1; i < expr.items.size(); ++i) {
            flatten_condition(expr.items[i], atoms);
        }
        return;
    }
    if (head.kind == SExpr::Kind::Symbol &&
        (iequals(head.text, "exists") || iequals(head.text, "="))) {
        atoms.push_back(expr);
        return;
    }
    if (head.kind != SExpr::Kind::Symbol) fail(head, "expected predicate name");
    atoms.push_back(expr);
}

void interpret_effect(const SExpr& expr, PddlAction& action) {
    if (expr.kind != SExpr::Kind::List || expr.items.empty()) fail(expr, "expected an effect");
    const SExpr& head = expr.items[0];
    if (head.kind == SExpr::Kind::Symbol && iequals(head.text, "and")) {
        for (std::size_t i = 1; i < expr.items.size(); ++i) interpret_effect(expr.items[i], action);
        return;
    }
    if (head.kind == SExpr::Kind::Symbol && iequals(head.text, "increase")) {
        if (expr.items.size() != 3 || expr.items[1].kind != SExpr::Kind::List ||
            expr.items[1].items.size() != 1 || expr.items[2].kind != SExpr::Kind::Number) {
            fail(expr, "unsupported increase effect");
        }
        action.cost += expr.items[2].number;
        action.has_cost = true;
        return;
    }
    if (head.kind != SExpr::Kind::Symbol) fail(head, "expected predicate name in effect");
    action.effect_atoms.push_back(expr);
}

PddlAction parse_action(const SExpr& form) {
    PddlAction action;
    if (form.items.size() < 2 || form.items[1].kind != SExpr::Kind::Symbol) {
        fail(form, "action needs a name");
    }
    action.name = form.items[1].text;
    std::size_t i = 2;
    while (i < form.items.size()) {
        const SExpr& key = form.items[i];
        if (key.kind != SExpr::Kind::Keyword) fail(key, "expected a keyword in action body");
        std::string k = lower(key.text);
        if (k == ":parameters") {
            if (i + 1 >= form.items.size()) fail(key, "missing :parameters value");
            action.parameters =
                parse_typed_names(form.items[i + 1], true, SExpr::Kind::Variable);
            action.has_parameters = true;
            i += 2;
        } else if (k == ":precondition") {
            if (i + 1 >= form.items.size()) fail(key, "missing :precondition value");
            action.precondition = form.items[i + 1];
            flatten_condition(*action.precondition, action.precondition_atoms);
            i += 2;
        } else if (k == ":effect") {
            if (i + 1 >= form.items.size()) fail(key, "missing :effect value");
            action.effect = form.items[i + 1];
            interpret_effect(*action.effect, action);
            i += 2;
        } else if (k == ":success-probability") {
            if (i + 1 >= form.items.size() || form.items[i + 1].kind != SExpr::Kind::Number) {
                fail(key, "missing :success-probability value");
            }
            action.success_probability = form.items[i + 1].number;
            action.has_probability = true;
            if (action.success_probability < 0.0 || action.success_probability > 1.0) {
                fail(form.items[i + 1], "success probability out of [0,1]");
            }
            i += 2;
        } else {
            fail(key, "unknown action keyword " + key.text);
        }
    }
    return action;
}

// sections like (:types a b c) carry their entries after the keyword
SExpr section_body(const SExpr& section) {
    SExpr body;
    body.kind = SExpr::Kind::List;
    body.line = section.line;
    body.column = section.column;
    body.items.assign(section.items.begin() + 1, section.items.end());
    return body;
}

void check_atoms_declared(const PddlDomain& domain, const std::vector<SExpr>& atoms) {
    if (!domain.has_predicates) return;
    std::set<std::string> declared;
    for (const PddlPredicate& p : domain.predicates) declared.insert(lower(p.name));
    auto check = [&declared](const SExpr& atom, auto&& self) -> void {
        if (atom.items.empty()) return;
        const SExpr& head = atom.items[0];
        if (iequals(head.text, "exists")) {
            if (atom.items.size() != 3) fail(atom, "malformed exists");
            std::vector<SExpr> inner;
            flatten_condition(atom.items[2], inner);
            for (const SExpr& a : inner) self(a, self);
            return;
        }
        if (iequals(head.text, "=")) return;  // fluent assignment / comparison
        if (!declared.count(lower(head.text))) {
            fail(head, "undeclared predicate " + head.text);
        }
    };
    for (const SExpr& atom : atoms) check(atom, check);
}

}  // namespace

bool SExpr::is_symbol(const std::string& name) const {
    return kind == Kind::Symbol && iequals(text, name);
}

const SExpr& SExpr::head() const {
    if (kind != Kind::List || items.empty()) throw InputError("s-expression has no head");
    return items[0];
}

SExpr SExpr::symbol(std::string name) {
    SExpr e;
    e.kind = Kind::Symbol;
    e.text = std::move(name);
    return e;
}

SExpr SExpr::list(std::vector<SExpr> items) {
    SExpr e;
    e.kind = Kind::List;
    e.items = std::move(items);
    return e;
}

const PddlAction* PddlDomain::find_action(const std::string& name) const {
    for (const PddlAction& a : actions) {
        if (iequals(a.name, name)) return &a;
    }
    return nullptr;
}

PddlDomain parse_domain(const std::string& text) {
    Parser parser(text);
    SExpr top = parser.parse_expr();
    parser.expect_end();
    if (top.kind != SExpr::Kind::List || top.items.size() < 2 || !top.items[0].is_symbol("define")) {
        fail(top, "expected (define (domain ...) ...)");
    }
    const SExpr& header = top.items[1];
    if (header.kind != SExpr::Kind::List || header.items.size() != 2 ||
        !header.items[0].is_symbol("domain")) {
        fail(header, "expected (domain <name>)");
    }
    PddlDomain domain;
    domain.name = header.items[1].text;

    for (std::size_t i = 2; i < top.items.size(); ++i) {
        const SExpr& section = top.items[i];
        if (section.kind != SExpr::Kind::List || section.items.empty() ||
            section.items[0].kind != SExpr::Kind::Keyword) {
            fail(section, "expected a (:keyword ...) section");
        }
        std::string key = lower(section.items[0].text);
        if (key == ":requirements") {
            for (std::size_t k = 1; k < section.items.size(); ++k) {
                const SExpr& req = section.items[k];
                if (req.kind != SExpr::Kind::Keyword ||
                    (!iequals(req.text, ":typing") && !iequals(req.text, ":fluents"))) {
                    fail(req, "unsupported requirement " + req.text);
                }
                domain.requirements.push_back(req.text);
            }
        } else if (key == ":types") {
            domain.types = parse_typed_names(section_body(section), false, SExpr::Kind::Symbol);
        } else if (key == ":constants") {
            domain.constants = parse_typed_names(section_body(section), false, SExpr::Kind::Symbol);
        } else if (key == ":predicates") {
            domain.has_predicates = true;
            for (std::size_t k = 1; k < section.items.size(); ++k) {
                const SExpr& pred = section.items[k];
                if (pred.kind != SExpr::Kind::List || pred.items.empty() ||
                    pred.items[0].kind != SExpr::Kind::Symbol) {
                    fail(pred, "expected (name params...) predicate");
                }
                PddlPredicate p;
                p.name = pred.items[0].text;
                SExpr params;
                params.kind = SExpr::Kind::List;
                params.items.assign(pred.items.begin() + 1, pred.items.end());
                p.parameters = parse_typed_names(params, false, SExpr::Kind::Variable);
                domain.predicates.push_back(std::move(p));
            }
        } else if (key == ":functions") {
            domain.has_functions = true;
            for (std::size_t k = 1; k < section.items.size(); ++k) {
                const SExpr& fn = section.items[k];
                if (fn.kind != SExpr::Kind::List || fn.items.size() != 1 ||
                    fn.items[0].kind != SExpr::Kind::Symbol) {
                    fail(fn, "expected (name) function declaration");
                }
                domain.functions.push_back(fn.items[0].text);
            }
        } else if (key == ":action") {
            domain.actions.push_back(parse_action(section));
        } else {
            fail(section.items[0], "unknown keyword " + section.items[0].text);
        }
    }
    for (const PddlAction& a : domain.actions) {
        check_atoms_declared(domain, a.precondition_atoms);
        check_atoms_declared(domain, a.effect_atoms);
    }
    return domain;
}

PddlProblem parse_problem(const std::string& text) {
    Parser parser(text);
    SExpr top = parser.parse_expr();
    parser.expect_end();
    if (top.kind != SExpr::Kind::List || top.items.size() < 2 || !top.items[0].is_symbol("define")) {
        fail(top, "expected (define (problem ...) ...)");
    }
    const SExpr& header = top.items[1];
    if (header.kind != SExpr::Kind::List || header.items.size() != 2 ||
        !header.items[0].is_symbol("problem")) {
        fail(header, "expected (problem <name>)");
    }
    PddlProblem problem;
    problem.name = header.items[1].text;

    for (std::size_t i = 2; i < top.items.size(); ++i) {
        const SExpr& section = top.items[i];
        if (section.kind != SExpr::Kind::List || section.items.empty() ||
            section.items[0].kind != SExpr::Kind::Keyword) {
            fail(section, "expected a (:keyword ...) section");
        }
        std::string key = lower(section.items[0].text);
        if (key == ":domain") {
            if (section.items.size() != 2) fail(section, "expected (:domain <name>)");
            problem.domain = section.items[1].text;
        } else if (key == ":objects") {
            problem.objects = parse_typed_names(section_body(section), false, SExpr::Kind::Symbol);
        } else if (key == ":init") {
            problem.init.assign(section.items.begin() + 1, section.items.end());
        } else if (key == ":goal") {
            if (section.items.size() != 2) fail(section, "expected (:goal <condition>)");
            problem.goal = section.items[1];
        } else if (key == ":metric") {
            SExpr metric;
            metric.kind = SExpr::Kind::List;
            metric.items.assign(section.items.begin() + 1, section.items.end());
            problem.metric = metric;
        } else {
            fail(section.items[0], "unknown keyword " + section.items[0].text);
        }
    }
    return problem;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

void write_sexpr(std::ostream& out, const SExpr& expr) {
    if (expr.kind != SExpr::Kind::List) {
        out << expr.text;
        return;
    }
    out << '(';
    for (std::size_t i = 0; i < expr.items.size(); ++i) {
        if (i > 0) out << ' ';
        write_sexpr(out, expr.items[i]);
    }
    out << ')';
}

void write_typed_names(std::ostream& out, const std::vector<TypedName>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out << ' ';
        out << names[i].name;
        bool group_end = i + 1 == names.size() || names[i + 1].type != names[i].type;
        if (!names[i].type.empty() && group_end) out << " - " << names[i].type;
    }
}

std::string trim_number(double value) {
    char buffer[40];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    std::string text(buffer, ptr);
    if (text.find('e') != std::string::npos || text.find('E') != std::string::npos) {
        auto [fptr, fec] =
            std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::fixed, 20);
        text.assign(buffer, fptr);
    }
    return text;
}

void write_action(std::ostream& out, const PddlAction& action) {
    out << "(:action " << action.name << "\n";
    if (action.has_parameters) {
        out << ":parameters (";
        write_typed_names(out, action.parameters);
        out << ")\n";
    }
    if (action.has_probability) {
        out << ":success-probability " << trim_number(action.success_probability) << "\n";
    }
    if (action.precondition) {
        out << ":precondition ";
        write_sexpr(out, *action.precondition);
        out << "\n";
    }
    if (action.effect) {
        out << ":effect ";
        write_sexpr(out, *action.effect);
        out << "\n";
    }
    out << ")\n";
}

}  // namespace

std::string emit_domain(const PddlDomain& domain) {
    std::ostringstream out;
    out << "(define (domain " << domain.name << ")\n";
    if (!domain.requirements.empty()) {
        out << "(:requirements";
        for (const std::string& req : domain.requirements) out << ' ' << req;
        out << ")\n";
    }
    if (!domain.types.empty()) {
        out << "(:types ";
        write_typed_names(out, domain.types);
        out << ")\n";
    }
    if (!domain.constants.empty()) {
        out << "(:constants ";
        write_typed_names(out, domain.constants);
        out << ")\n";
    }
    if (domain.has_functions) {
        out << "(:functions";
        for (const std::string& fn : domain.functions) out << " (" << fn << ")";
        out << ")\n";
    }
    if (domain.has_predicates) {
        out << "(:predicates\n";
        for (const PddlPredicate& pred : domain.predicates) {
            out << "  (" << pred.name;
            if (!pred.parameters.empty()) {
                out << ' ';
                write_typed_names(out, pred.parameters);
            }
            out << ")\n";
        }
        out << ")\n";
    }
    for (const PddlAction& action : domain.actions) {
        out << "\n";
        write_action(out, action);
    }
    out << ")\n";
    return out.str();
}

std::string emit_problem(const PddlProblem& problem) {
    std::ostringstream out;
    out << "(define (problem " << problem.name << ")\n";
    out << "(:domain " << problem.domain << ")\n";
    if (!problem.objects.empty()) {
        out << "(:objects ";
        write_typed_names(out, problem.objects);
        out << ")\n";
    }
    out << "(:init";
    for (const SExpr& atom : problem.init) {
        out << "\n  ";
        write_sexpr(out, atom);
    }
    out << "\n)\n";
    if (problem.goal) {
        out << "(:goal ";
        write_sexpr(out, *problem.goal);
        out << ")\n";
    }
    if (problem.metric) {
        out << "(:metric";
        for (const SExpr& item : problem.metric->items) {
            out << ' ';
            write_sexpr(out, item);
        }
        out << ")\n";
    }
    out << ")\n";
    return out.str();
}

std::vector<std::string> tokenize(const std::string& text) {
    Lexer lexer(text);
    std::vector<std::string> tokens;
    for (Token t = lexer.next(); t.kind != Token::Kind::End; t = lexer.next()) {
        switch (t.kind) {
            case Token::Kind::LParen: tokens.push_back("("); break;
            case Token::Kind::RParen: tokens.push_back(")"); break;
            default: tokens.push_back(t.text); break;
        }
    }
    return tokens;
}

// ---------------------------------------------------------------------------
// Scenario -> PDDL transform

namespace {

std::string sanitize(const std::string& name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
        out.push_back(ok ? c : '_');
    }
    if (out.empty()) return "x";
    // symbols must not lex as numbers ("2003", "8.04")
    if (!std::isalpha(static_cast<unsigned char>(out[0]))) out.insert(out.begin(), 'v');
    return out;
}

std::string port_symbol(Port port) { return "port" + std::to_string(port); }

// os fact key -> (predicate, PDDL type)
const std::pair<const char*, const char*>& os_predicate(const std::string& key) {
    static const std::map<std::string, std::pair<const char*, const char*>> table = {
        {"name", {"has_OS", "operating_system"}},
        {"version", {"has_OS_version", "OS_version"}},
        {"edition", {"has_OS_edition", "OS_edition"}},
        {"service-pack", {"has_OS_servicepack", "OS_servicepack"}},
        {"distro", {"has_OS_distro", "OS_distro"}},
        {"kernel", {"has_kernel_version", "kernel_version"}},
        {"architecture", {"has_architecture", "OS_architecture"}},
    };
    auto it = table.find(key);
    if (it == table.end()) throw InputError("unknown os fact: " + key);
    return it->second;
}

SExpr atom(std::initializer_list<std::string> parts) {
    std::vector<SExpr> items;
    for (const std::string& part : parts) items.push_back(SExpr::symbol(part));
    return SExpr::list(std::move(items));
}

SExpr number_expr(double value) {
    SExpr e;
    e.kind = SExpr::Kind::Number;
    e.number = value;
    char buffer[40];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    e.text.assign(buffer, ptr);
    if (e.text.find('e') != std::string::npos || e.text.find('E') != std::string::npos) {
        // decimal literals only
        auto [fptr, fec] =
            std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::fixed, 20);
        e.text.assign(buffer, fptr);
    }
    return e;
}

SExpr var(const char* name) {
    SExpr e;
    e.kind = SExpr::Kind::Variable;
    e.text = name;
    return e;
}

PddlAction plumbing_ip_connect() {
    PddlAction a;
    a.name = "IP_connect";
    a.parameters = {{"?s", "host"}, {"?t", "host"}};
    a.has_parameters = true;
    SExpr exists = SExpr::list(
        {SExpr::symbol("exists"), SExpr::list({var("?n"), SExpr::symbol("-"), SExpr::symbol("network")}),
         SExpr::list({SExpr::symbol("and"),
                      SExpr::list({SExpr::symbol("connected_to_network"), var("?s"), var("?n")}),
                      SExpr::list({SExpr::symbol("connected_to_network"), var("?t"), var("?n")})})});
    a.precondition = SExpr::list(
        {SExpr::symbol("and"), SExpr::list({SExpr::symbol("compromised"), var("?s")}), exists});
    a.effect = SExpr::list({SExpr::symbol("IP_connectivity"), var("?s"), var("?t")});
    return a;
}

PddlAction plumbing_port_connect(bool udp) {
    PddlAction a;
    a.name = udp ? "UDP_connect" : "TCP_connect";
    a.parameters = {{"?s", "host"}, {"?t", "host"}, {"?p", "port"}};
    a.has_parameters = true;
    a.precondition = SExpr::list(
        {SExpr::symbol("and"), SExpr::list({SExpr::symbol("compromised"), var("?s")}),
         SExpr::list({SExpr::symbol("IP_connectivity"), var("?s"), var("?t")}),
         SExpr::list({SExpr::symbol(udp ? "UDP_listen_port" : "TCP_listen_port"), var("?t"), var("?p")})});
    a.effect = SExpr::list(
        {SExpr::symbol(udp ? "UDP_connectivity" : "TCP_connectivity"), var("?s"), var("?t"), var("?p")});
    return a;
}

PddlAction plumbing_mark_compromised() {
    PddlAction a;
    a.name = "Mark_as_compromised";
    a.parameters = {{"?h", "host"}, {"?priv", "privileges"}};
    a.has_parameters = true;
    a.precondition = SExpr::list({SExpr::symbol("installed_agent"), var("?h"), var("?priv")});
    a.effect = SExpr::list({SExpr::symbol("compromised"), var("?h")});
    return a;
}

}  // namespace

PddlPair emit_pddl(const Scenario& scenario) {
    scenario.validate();

    PddlDomain domain;
    domain.name = "attack-planning";
    domain.requirements = {":typing", ":fluents"};
    for (const char* type :
         {"network", "host", "port", "port_set", "application", "agent", "privileges",
          "operating_system", "OS_version", "OS_edition", "OS_build", "OS_servicepack", "OS_distro",
          "kernel_version", "OS_architecture"}) {
        domain.types.push_back({type, ""});
    }
    domain.has_predicates = true;
    auto pred = [&domain](const char* name, std::initializer_list<TypedName> params) {
        domain.predicates.push_back({name, params});
    };
    pred("connected_to_network", {{"?s", "host"}, {"?n", "network"}});
    pred("IP_connectivity", {{"?s", "host"}, {"?t", "host"}});
    pred("TCP_connectivity", {{"?s", "host"}, {"?t", "host"}, {"?p", "port"}});
    pred("UDP_connectivity", {{"?s", "host"}, {"?t", "host"}, {"?p", "port"}});
    pred("TCP_listen_port", {{"?h", "host"}, {"?p", "port"}});
    pred("UDP_listen_port", {{"?h", "host"}, {"?p", "port"}});
    pred("has_OS", {{"?h", "host"}, {"?os", "operating_system"}});
    pred("has_OS_version", {{"?h", "host"}, {"?osv", "OS_version"}});
    pred("has_OS_edition", {{"?h", "host"}, {"?ose", "OS_edition"}});
    pred("has_OS_build", {{"?h", "host"}, {"?osb", "OS_build"}});
    pred("has_OS_servicepack", {{"?h", "host"}, {"?ossp", "OS_servicepack"}});
    pred("has_OS_distro", {{"?h", "host"}, {"?osd", "OS_distro"}});
    pred("has_kernel_version", {{"?h", "host"}, {"?kv", "kernel_version"}});
    pred("has_architecture", {{"?h", "host"}, {"?a", "OS_architecture"}});
    pred("has_application", {{"?h", "host"}, {"?p", "application"}});
    pred("installed_agent", {{"?h", "host"}, {"?priv", "privileges"}});
    pred("compromised", {{"?h", "host"}});
    domain.has_functions = true;
    domain.functions = {"time"};

    // constants: application names, port numbers, OS details
    std::map<std::string, std::set<std::string>> constants_by_type;
    constants_by_type["agent"].insert("localagent");
    constants_by_type["privileges"].insert("high_privileges");
    auto add_os_constants = [&constants_by_type](const std::map<std::string, std::string>& facts) {
        for (const auto& [key, value] : facts) {
            constants_by_type[os_predicate(key).second].insert(sanitize(value));
        }
    };
    for (const Machine& m : scenario.machines) {
        add_os_constants(m.os.to_detail());
        for (Port p : m.open_tcp_ports) constants_by_type["port"].insert(port_symbol(p));
        for (Port p : m.open_udp_ports) constants_by_type["port"].insert(port_symbol(p));
        for (const std::string& app : m.applications) {
            constants_by_type["application"].insert(sanitize(app));
        }
    }

    bool any_udp = false;
    for (const Action& e : scenario.exploits) {
        for (const Asset& req : e.requirements) {
            if (req.kind == AssetKind::OsKnowledge) add_os_constants(req.detail);
            if (req.kind == AssetKind::ApplicationKnowledge) {
                auto it = req.detail.find("application");
                if (it != req.detail.end()) {
                    constants_by_type["application"].insert(sanitize(it->second));
                }
            }
            if (req.port) constants_by_type["port"].insert(port_symbol(*req.port));
            if (req.kind == AssetKind::UdpConnectivity) any_udp = true;
        }
    }
    for (const auto& [type, names] : constants_by_type) {
        for (const std::string& name : names) domain.constants.push_back({name, type});
    }

    domain.actions.push_back(plumbing_ip_connect());
    domain.actions.push_back(plumbing_port_connect(false));
    if (any_udp) domain.actions.push_back(plumbing_port_connect(true));
    domain.actions.push_back(plumbing_mark_compromised());

    for (const Action& e : scenario.exploits) {
        PddlAction action;
        action.name = sanitize(e.name.empty() ? e.id : e.name);
        action.parameters = {{"?s", "host"}, {"?t", "host"}};
        action.has_parameters = true;
        if (e.p != 1.0) {
            action.success_probability = e.p;
            action.has_probability = true;
        }
        std::vector<SExpr> pre;
        pre.push_back(SExpr::symbol("and"));
        pre.push_back(SExpr::list({SExpr::symbol("compromised"), var("?s")}));
        for (const Asset& req : e.requirements) {
            switch (req.kind) {
                case AssetKind::Agent:
                    break;  // covered by (compromised ?s)
                case AssetKind::OsKnowledge: {
                    std::vector<SExpr> facts;
                    facts.push_back(SExpr::symbol("and"));
                    for (const auto& [key, value] : req.detail) {
                        facts.push_back(SExpr::list({SExpr::symbol(os_predicate(key).first),
                                                     var("?t"), SExpr::symbol(sanitize(value))}));
                    }
                    if (facts.size() == 2) {
                        pre.push_back(facts[1]);
                    } else if (facts.size() > 2) {
                        pre.push_back(SExpr::list(std::move(facts)));
                    }
                    break;
                }
                case AssetKind::ApplicationKnowledge: {
                    auto it = req.detail.find("application");
                    if (it != req.detail.end()) {
                        pre.push_back(SExpr::list({SExpr::symbol("has_application"), var("?t"),
                                                   SExpr::symbol(sanitize(it->second))}));
                    }
                    break;
                }
                case AssetKind::TcpConnectivity:
                case AssetKind::UdpConnectivity: {
                    const char* name =
                        req.kind == AssetKind::UdpConnectivity ? "UDP_connectivity" : "TCP_connectivity";
                    pre.push_back(SExpr::list(
                        {SExpr::symbol(name), var("?s"), var("?t"), SExpr::symbol(port_symbol(*req.port))}));
                    break;
                }
                case AssetKind::IpConnectivity:
                    pre.push_back(SExpr::list({SExpr::symbol("IP_connectivity"), var("?s"), var("?t")}));
                    break;
                case AssetKind::PortKnowledge:
                    pre.push_back(SExpr::list({SExpr::symbol("TCP_listen_port"), var("?t"),
                                               SExpr::symbol(port_symbol(*req.port))}));
                    break;
            }
        }
        action.precondition = SExpr::list(std::move(pre));
        action.effect = SExpr::list(
            {SExpr::symbol("and"),
             SExpr::list({SExpr::symbol("installed_agent"), var("?t"), SExpr::symbol("high_privileges")}),
             SExpr::list({SExpr::symbol("increase"), SExpr::list({SExpr::symbol("time")}),
                          number_expr(e.t)})});
        domain.actions.push_back(std::move(action));
    }

    PddlProblem problem;
    problem.name = "attack-scenario";
    problem.domain = domain.name;
    for (const Machine& m : scenario.machines) problem.objects.push_back({sanitize(m.id), "host"});
    for (const std::string& net : scenario.subnets) {
        problem.objects.push_back({sanitize(net), "network"});
    }
    problem.init.push_back(
        atom({"installed_agent", sanitize(scenario.source), "high_privileges"}));
    for (const Machine& m : scenario.machines) {
        for (const std::string& net : m.subnets) {
            problem.init.push_back(atom({"connected_to_network", sanitize(m.id), sanitize(net)}));
        }
        for (Port p : m.open_tcp_ports) {
            problem.init.push_back(atom({"TCP_listen_port", sanitize(m.id), port_symbol(p)}));
        }
        for (Port p : m.open_udp_ports) {
            problem.init.push_back(atom({"UDP_listen_port", sanitize(m.id), port_symbol(p)}));
        }
        for (const auto& [key, value] : m.os.to_detail()) {
            problem.init.push_back(
                atom({os_predicate(key).first, sanitize(m.id), sanitize(value)}));
        }
        for (const std::string& app : m.applications) {
            problem.init.push_back(atom({"has_application", sanitize(m.id), sanitize(app)}));
        }
    }
    problem.init.push_back(SExpr::list(
        {SExpr::symbol("="), SExpr::list({SExpr::symbol("time")}), number_expr(0)}));

    std::vector<SExpr> goal_atoms;
    for (const Asset& g : scenario.goals) {
        goal_atoms.push_back(atom({"compromised", sanitize(g.host)}));
    }
    if (goal_atoms.size() == 1) {
        problem.goal = goal_atoms[0];
    } else if (!goal_atoms.empty()) {
        std::vector<SExpr> conj;
        conj.push_back(SExpr::symbol("and"));
        for (SExpr& g : goal_atoms) conj.push_back(std::move(g));
        problem.goal = SExpr::list(std::move(conj));
    }
    problem.metric =
        SExpr::list({SExpr::symbol("minimize"), SExpr::list({SExpr::symbol("time")})});

    return {emit_domain(domain), emit_problem(problem)};
}

// ---------------------------------------------------------------------------
// PDDL -> scenario (inverse transform)

namespace {

std::optional<Port> parse_port_symbol(const std::string& symbol) {
    if (symbol.rfind("port", 0) != 0) return std::nullopt;
    int value = 0;
    for (std::size_t i = 4; i < symbol.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(symbol[i]))) return std::nullopt;
        value = value * 10 + (symbol[i] - '0');
        if (value > 65535) return std::nullopt;
    }
    return value > 0 ? std::optional<Port>(static_cast<Port>(value)) : std::nullopt;
}

const std::map<std::string, std::string>& os_fact_by_predicate() {
    static const std::map<std::string, std::string> table = {
        {"has_os", "name"},
        {"has_os_version", "version"},
        {"has_os_edition", "edition"},
        {"has_os_servicepack", "service-pack"},
        {"has_os_distro", "distro"},
        {"has_kernel_version", "kernel"},
        {"has_architecture", "architecture"},
    };
    return table;
}

void apply_os_fact(OsFacts& os, const std::string& fact, const std::string& value) {
    if (fact == "name") os.name = value;
    else if (fact == "version") os.version = value;
    else if (fact == "edition") os.edition = value;
    else if (fact == "service-pack") os.service_pack = value;
    else if (fact == "distro") os.distro = value;
    else if (fact == "kernel") os.kernel = value;
    else if (fact == "architecture") os.architecture = value;
}

bool is_plumbing_action(const std::string& name) {
    return iequals(name, "IP_connect") || iequals(name, "TCP_connect") ||
           iequals(name, "UDP_connect") || iequals(name, "Mark_as_compromised");
}

}  // namespace

Scenario scenario_from_pddl(const PddlDomain& domain, const PddlProblem& problem) {
    Scenario scenario;
    std::map<std::string, std::size_t> machine_index;
    for (const TypedName& object : problem.objects) {
        if (iequals(object.type, "host")) {
            machine_index[lower(object.name)] = scenario.machines.size();
            Machine m;
            m.id = object.name;
            scenario.machines.push_back(std::move(m));
        } else if (iequals(object.type, "network")) {
            scenario.subnets.push_back(object.name);
        }
    }

    auto machine_of = [&](const std::string& name) -> Machine& {
        auto it = machine_index.find(lower(name));
        if (it == machine_index.end()) throw InputError("init references unknown host " + name);
        return scenario.machines[it->second];
    };

    for (const SExpr& init : problem.init) {
        if (init.kind != SExpr::Kind::List || init.items.empty()) continue;
        const SExpr& head = init.items[0];
        if (head.kind != SExpr::Kind::Symbol) continue;
        std::string name = lower(head.text);
        if (name == "=") continue;  // fluent initialization
        if (name == "connected_to_network" && init.items.size() == 3) {
            machine_of(init.items[1].text).subnets.insert(init.items[2].text);
        } else if ((name == "tcp_listen_port" || name == "udp_listen_port") && init.items.size() == 3) {
            std::optional<Port> port = parse_port_symbol(lower(init.items[2].text));
            if (!port) throw InputError("bad port symbol " + init.items[2].text);
            Machine& m = machine_of(init.items[1].text);
            if (name == "tcp_listen_port") m.open_tcp_ports.insert(*port);
            else m.open_udp_ports.insert(*port);
        } else if (name == "has_application" && init.items.size() == 3) {
            machine_of(init.items[1].text).applications.insert(init.items[2].text);
        } else if (name == "installed_agent" && init.items.size() >= 2) {
            scenario.source = init.items[1].text;
        } else if (os_fact_by_predicate().count(name) && init.items.size() == 3) {
            apply_os_fact(machine_of(init.items[1].text).os, os_fact_by_predicate().at(name),
                          init.items[2].text);
        }
    }

    for (const PddlAction& action : domain.actions) {
        if (is_plumbing_action(action.name)) continue;
        Action exploit;
        exploit.id = action.name;
        exploit.name = action.name;
        exploit.kind = ActionKind::Exploit;
        exploit.p = action.success_probability;
        exploit.t = action.cost;
        exploit.result = agent_asset(kTargetPlaceholder);

        std::map<std::string, std::string> os_detail;
        bool has_connectivity = false;
        for (const SExpr& atom : action.precondition_atoms) {
            const SExpr& head = atom.items[0];
            std::string name = lower(head.text);
            if (name == "compromised") {
                exploit.requirements.push_back(agent_asset(kSourcePlaceholder));
            } else if (name == "tcp_connectivity" || name == "udp_connectivity") {
                std::optional<Port> port = parse_port_symbol(lower(atom.items.back().text));
                if (!port) throw InputError("bad port symbol in " + action.name);
                exploit.requirements.push_back(
                    name == "tcp_connectivity"
                        ? tcp_connectivity_asset(kSourcePlaceholder, kTargetPlaceholder, *port)
                        : udp_connectivity_asset(kSourcePlaceholder, kTargetPlaceholder, *port));
                has_connectivity = true;
            } else if (name == "ip_connectivity") {
                exploit.requirements.push_back(
                    ip_connectivity_asset(kSourcePlaceholder, kTargetPlaceholder));
                has_connectivity = true;
            } else if (name == "has_application" && atom.items.size() == 3) {
                Asset req;
                req.kind = AssetKind::ApplicationKnowledge;
                req.host = kTargetPlaceholder;
                req.detail["application"] = atom.items[2].text;
                exploit.requirements.push_back(std::move(req));
            } else if (os_fact_by_predicate().count(name) && atom.items.size() == 3) {
                os_detail[os_fact_by_predicate().at(name)] = atom.items[2].text;
            }
        }
        if (!os_detail.empty()) {
            exploit.requirements.push_back(
                os_knowledge_asset(kTargetPlaceholder, std::move(os_detail)));
        }
        if (!has_connectivity) {
            // without an explicit connectivity requirement the exploit at
            // least needs to reach the target
            exploit.requirements.push_back(
                ip_connectivity_asset(kSourcePlaceholder, kTargetPlaceholder));
        }
        scenario.exploits.push_back(std::move(exploit));
    }

    if (problem.goal) {
        std::vector<SExpr> goal_atoms;
        flatten_condition(*problem.goal, goal_atoms);
        for (const SExpr& atom : goal_atoms) {
            if (atom.items.empty()) continue;
            std::string name = lower(atom.items[0].text);
            if ((name == "compromised" || name == "installed_agent") && atom.items.size() >= 2) {
                scenario.goals.push_back(agent_asset(atom.items[1].text));
            }
        }
    }
    scenario.validate();
    return scenario;
}

// ---------------------------------------------------------------------------
// Goal-regression solving for ground domains

namespace {

std::string atom_key(const SExpr& atom) {
    std::string key = "(";
    for (std::size_t i = 0; i < atom.items.size(); ++i) {
        if (i > 0) key += ' ';
        if (atom.items[i].kind == SExpr::Kind::Variable) {
            throw StructureError("solve_attack_tree_pddl supports only ground atoms");
        }
        key += lower(atom.items[i].text);
    }
    return key + ")";
}

struct Regression {
    const PddlDomain& domain;
    const std::set<std::string>& init;
    const std::map<std::string, std::vector<int>>& providers;
    bool unit_costs;

    tree::AttackTree tree;
    std::vector<int> node_action;  // tree action node -> domain action index
    std::vector<std::string> path;

    int add_atom(const std::string& key) {
        if (std::find(path.begin(), path.end(), key) != path.end()) {
            throw StructureError("cyclic dependency through " + key);
        }
        if (tree.assets.size() > 10000) {
            throw StructureError("asset lattice too large to expand as a tree");
        }
        Asset asset;
        asset.kind = AssetKind::ApplicationKnowledge;
        asset.host = key;
        tree.assets.push_back(tree::AssetNode{std::move(asset), {}, false});
        int idx = static_cast<int>(tree.assets.size()) - 1;

        if (init.count(key)) {
            add_action(idx, -1, 0.0, 1.0, {});
            return idx;
        }
        auto found = providers.find(key);
        if (found == providers.end()) return idx;  // unsatisfiable atom
        path.push_back(key);
        for (int action_index : found->second) {
            const PddlAction& action = domain.actions[action_index];
            double t = unit_costs ? 1.0 : action.cost;
            std::vector<std::string> requirements;
            for (const SExpr& pre : action.precondition_atoms) {
                if (!pre.items.empty() && pre.items[0].kind == SExpr::Kind::Symbol &&
                    (iequals(pre.items[0].text, "exists") || iequals(pre.items[0].text, "="))) {
                    throw StructureError("unsupported precondition in ground solving: " +
                                         pre.items[0].text);
                }
                requirements.push_back(atom_key(pre));
            }
            add_action(idx, action_index, t, action.success_probability, requirements);
        }
        path.pop_back();
        return idx;
    }

    void add_action(int asset_idx, int action_index, double t, double p,
                    const std::vector<std::string>& requirements) {
        tree::ActionNode node;
        node.kind = ActionKind::Plumbing;
        node.t = t;
        node.p = p;
        node.fact = action_index < 0;
        node.parent_asset = asset_idx;
        tree.actions.push_back(std::move(node));
        node_action.push_back(action_index);
        int idx = static_cast<int>(tree.actions.size()) - 1;
        tree.assets[asset_idx].providers.push_back(idx);
        std::vector<int> req_nodes;
        req_nodes.reserve(requirements.size());
        for (const std::string& req : requirements) req_nodes.push_back(add_atom(req));
        tree.actions[idx].requirements = std::move(req_nodes);
    }
};

}  // namespace

Plan solve_attack_tree_pddl(const PddlDomain& domain, const PddlProblem& problem) {
    for (const PddlAction& action : domain.actions) {
        if (action.has_parameters && !action.parameters.empty()) {
            throw StructureError("solve_attack_tree_pddl supports only ground (parameter-free) domains");
        }
    }
    if (!problem.goal) throw InputError("problem has no goal");

    std::set<std::string> init;
    for (const SExpr& item : problem.init) {
        if (item.kind != SExpr::Kind::List || item.items.empty()) continue;
        if (item.items[0].kind == SExpr::Kind::Symbol && iequals(item.items[0].text, "=")) continue;
        init.insert(atom_key(item));
    }
    std::map<std::string, std::vector<int>> providers;
    for (std::size_t i = 0; i < domain.actions.size(); ++i) {
        for (const SExpr& eff : domain.actions[i].effect_atoms) {
            providers[atom_key(eff)].push_back(static_cast<int>(i));
        }
    }

    std::vector<SExpr> goal_atoms;
    flatten_condition(*problem.goal, goal_atoms);
    if (goal_atoms.empty()) throw InputError("problem goal is empty");

    Regression regression{domain, init, providers, !domain.has_functions, {}, {}, {}};
    regression.tree.source = "init";
    regression.tree.target = "goal";

    if (goal_atoms.size() == 1) {
        regression.tree.root = regression.add_atom(atom_key(goal_atoms[0]));
    } else {
        // synthetic root: one zero-cost action requiring every goal atom
        Asset root_asset;
        root_asset.kind = AssetKind::ApplicationKnowledge;
        root_asset.host = "(goal)";
        regression.tree.assets.push_back(tree::AssetNode{std::move(root_asset), {}, false});
        regression.tree.root = 0;
        std::vector<std::string> requirements;
        for (const SExpr& g : goal_atoms) requirements.push_back(atom_key(g));
        regression.add_action(0, -1, 0.0, 1.0, requirements);
        regression.tree.actions[0].fact = false;  // keep it in the expansion
    }

    tree::TreeSolution solution = tree::solve_tree(regression.tree);
    Plan plan;
    for (int node : solution.plan) {
        int action_index = regression.node_action[node];
        if (action_index < 0) continue;  // synthetic goal collector
        PlanStep step;
        step.action_id = domain.actions[action_index].name;
        step.name = domain.actions[action_index].name;
        step.t = regression.tree.actions[node].t;
        step.p = regression.tree.actions[node].p;
        plan.steps.push_back(std::move(step));
    }
    PlanHop hop;
    hop.source = "init";
    hop.target = "goal";
    hop.time = solution.stats.T;
    hop.prob = solution.stats.P;
    hop.step_count = plan.steps.size();
    plan.hops.push_back(hop);
    plan.recompute_totals();
    if (!plan.feasible()) plan.status = "goal unreachable";
    return plan;
}

}  // namespace aplan::pddl
