#include "kgqa/errors.hpp"
#include "kgqa/kg.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace kgqa {

namespace {

bool pn_safe(const std::string& local) {
    if (local.empty())
        return false;
    for (unsigned char c : local)
        if (!std::isalnum(c) && c != '_')
            return false;
    return true;
}

std::string escape_literal(const std::string& v) {
    std::string out;
    out.reserve(v.size() + 2);
    for (char c : v) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '"': out += "\\\""; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string render_iri(const Iri& iri, const std::vector<std::pair<std::string, std::string>>& prefixes) {
    const std::string full = iri.full();
    const std::string* best_prefix = nullptr;
    const std::string* best_ns = nullptr;
    for (const auto& [name, ns] : prefixes) {
        if (full.size() > ns.size() && full.compare(0, ns.size(), ns) == 0) {
            if (!best_ns || ns.size() > best_ns->size()) {
                best_prefix = &name;
                best_ns = &ns;
            }
        }
    }
    if (best_ns) {
        std::string local = full.substr(best_ns->size());
        if (pn_safe(local))
            return *best_prefix + ":" + local;
    }
    return "<" + full + ">";
}

std::string render_term(const Term& t,
                        const std::vector<std::pair<std::string, std::string>>& prefixes) {
    if (std::holds_alternative<Iri>(t))
        return render_iri(std::get<Iri>(t), prefixes);
    return "\"" + escape_literal(std::get<Literal>(t).value) + "\"";
}

} // namespace

std::string serialize_turtle(const KnowledgeGraph& g) {
    auto prefixes = g.ns().prefixes();
    std::ostringstream os;
    for (const auto& [name, ns] : prefixes)
        os << "@prefix " << name << ": <" << ns << "> .\n";
    os << "\n";
    for (const auto& t : g.triples()) {
        std::string pred = t.predicate.full() == g.ns().type_pred
                               ? "a"
                               : render_iri(t.predicate, prefixes);
        os << render_iri(t.subject, prefixes) << " " << pred << " "
           << render_term(t.object, prefixes) << " .\n";
    }
    return os.str();
}

namespace {

struct TurtleLexer {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line = 1;
    std::size_t col = 1;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("turtle syntax error at line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + msg);
    }

    void advance() {
        if (text[pos] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++pos;
    }

    void skip_ws() {
        while (pos < text.size()) {
            char c = text[pos];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '#') {
                while (pos < text.size() && text[pos] != '\n')
                    advance();
            } else {
                break;
            }
        }
    }

    bool eof() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() const { return text[pos]; }

    // Token kinds: punct (".", ";", ","), iri "<...>", pname "p:l", keyword
    // ("a", "@prefix"), literal (decoded string value).
    struct Token {
        enum Kind { Punct, IriRef, PName, Keyword, StringLit } kind;
        std::string value;
        std::string extra; // pname local part
    };

    Token next() {
        skip_ws();
        if (pos >= text.size())
            fail("unexpected end of input");
        char c = peek();
        if (c == '.' || c == ';' || c == ',') {
            advance();
            return {Token::Punct, std::string(1, c), ""};
        }
        if (c == '<') {
            advance();
            std::string iri;
            while (pos < text.size() && peek() != '>') {
                iri.push_back(peek());
                advance();
            }
            if (pos >= text.size())
                fail("unterminated IRI reference");
            advance(); // '>'
            return {Token::IriRef, iri, ""};
        }
        if (c == '"') {
            advance();
            std::string v;
            while (pos < text.size() && peek() != '"') {
                char ch = peek();
                if (ch == '\\') {
                    advance();
                    if (pos >= text.size())
                        fail("unterminated escape in literal");
                    char esc = peek();
                    switch (esc) {
                    case '\\': v.push_back('\\'); break;
                    case '"': v.push_back('"'); break;
                    case 'n': v.push_back('\n'); break;
                    case 'r': v.push_back('\r'); break;
                    case 't': v.push_back('\t'); break;
                    default: fail(std::string("unsupported escape \\") + esc);
                    }
                    advance();
                } else if (ch == '\n') {
                    fail("newline inside string literal");
                } else {
                    v.push_back(ch);
                    advance();
                }
            }
            if (pos >= text.size())
                fail("unterminated string literal");
            advance(); // closing quote
            return {Token::StringLit, v, ""};
        }
        if (c == '@') {
            std::string word;
            while (pos < text.size() && !std::isspace(static_cast<unsigned char>(peek()))) {
                word.push_back(peek());
                advance();
            }
            if (word != "@prefix")
                fail("unsupported directive '" + word + "'");
            return {Token::Keyword, word, ""};
        }
        // prefixed name or bare keyword 'a'
        std::string word;
        while (pos < text.size()) {
            char ch = peek();
            if (std::isspace(static_cast<unsigned char>(ch)) || ch == ';' || ch == ',' ||
                ch == '<' || ch == '"')
                break;
            if (ch == '.' ) {
                // '.' ends a statement unless it is inside a local name
                // (we never emit those); treat as terminator.
                break;
            }
            word.push_back(ch);
            advance();
        }
        if (word.empty())
            fail(std::string("unexpected character '") + c + "'");
        if (word == "a")
            return {Token::Keyword, word, ""};
        auto colon = word.find(':');
        if (colon == std::string::npos)
            fail("expected prefixed name, got '" + word + "'");
        return {Token::PName, word.substr(0, colon), word.substr(colon + 1)};
    }
};

} // namespace

KnowledgeGraph parse_turtle(std::string_view text, const NamespaceConfig& ns) {
    KnowledgeGraph g(ns);
    TurtleLexer lex{text};
    std::map<std::string, std::string> prefix_map;

    auto resolve = [&](const TurtleLexer::Token& tok) -> Iri {
        if (tok.kind == TurtleLexer::Token::IriRef)
            return Iri{tok.value, ""};
        if (tok.kind == TurtleLexer::Token::Keyword && tok.value == "a")
            return Iri{ns.type_pred, ""};
        if (tok.kind == TurtleLexer::Token::PName) {
            auto it = prefix_map.find(tok.value);
            if (it == prefix_map.end())
                lex.fail("unknown prefix '" + tok.value + ":'");
            return Iri{it->second, tok.extra};
        }
        lex.fail("expected IRI");
    };

    while (!lex.eof()) {
        auto tok = lex.next();
        if (tok.kind == TurtleLexer::Token::Keyword && tok.value == "@prefix") {
            auto name_tok = lex.next();
            if (name_tok.kind != TurtleLexer::Token::PName || !name_tok.extra.empty())
                lex.fail("expected 'prefix:' after @prefix");
            auto iri_tok = lex.next();
            if (iri_tok.kind != TurtleLexer::Token::IriRef)
                lex.fail("expected <iri> in @prefix");
            auto dot = lex.next();
            if (dot.kind != TurtleLexer::Token::Punct || dot.value != ".")
                lex.fail("expected '.' after @prefix");
            prefix_map[name_tok.value] = iri_tok.value;
            continue;
        }
        // Statement: subject predicate object (';' p o)* (',' o)* '.'
        Iri subject = resolve(tok);
        bool statement_done = false;
        while (!statement_done) {
            auto pred_tok = lex.next();
            Iri predicate = resolve(pred_tok);
            bool predicate_done = false;
            while (!predicate_done) {
                auto obj_tok = lex.next();
                Term object;
                if (obj_tok.kind == TurtleLexer::Token::StringLit)
                    object = Literal{obj_tok.value};
                else
                    object = resolve(obj_tok);
                g.add({subject, predicate, object});
                auto sep = lex.next();
                if (sep.kind != TurtleLexer::Token::Punct)
                    lex.fail("expected '.', ';' or ',' after object");
                if (sep.value == ",") {
                    continue;
                } else if (sep.value == ";") {
                    predicate_done = true;
                } else if (sep.value == ".") {
                    predicate_done = true;
                    statement_done = true;
                }
            }
        }
    }
    g.finalize();
    return g;
}

} // namespace kgqa
