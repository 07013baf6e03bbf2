#include "kgqa/query.hpp"

#include "kgqa/errors.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace kgqa {

std::string iri_display_name(const std::string& full_iri) {
    if (full_iri.empty())
        return full_iri;
    std::size_t end = full_iri.size();
    if (full_iri[end - 1] == '/' || full_iri[end - 1] == '#')
        --end;
    if (end == 0)
        return full_iri;
    std::size_t cut = full_iri.find_last_of("/#", end - 1);
    std::size_t begin = (cut == std::string::npos) ? 0 : cut + 1;
    return full_iri.substr(begin, end - begin);
}

std::string SolutionCell::display() const {
    if (!is_term)
        return text;
    if (std::holds_alternative<Iri>(term))
        return std::get<Iri>(term).full();
    return std::get<Literal>(term).value;
}

std::string SolutionTable::to_tsv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns.size(); ++i)
        os << (i ? "\t" : "") << "?" << columns[i];
    os << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "\t" : "") << row[i].display();
        os << "\n";
    }
    return os.str();
}

namespace {

const char* kUnsupportedKeywords[] = {
    "OPTIONAL", "UNION",    "ORDER", "LIMIT",   "OFFSET", "MINUS",
    "BIND",     "VALUES",   "ASK",   "DESCRIBE", "CONSTRUCT", "SERVICE",
    "HAVING",   "EXISTS",
};

struct QueryLexer {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line = 1;
    std::size_t col = 1;

    struct Token {
        enum Kind { End, Word, Var, IriRef, PName, StringLit, Punct } kind = End;
        std::string value;
        std::string extra; // pname local
        std::size_t line = 0, col = 0;
    };

    [[noreturn]] void fail(const std::string& msg, const Token* at = nullptr) const {
        std::size_t l = at ? at->line : line;
        std::size_t c = at ? at->col : col;
        throw ParseError("query syntax error at line " + std::to_string(l) + ", column " +
                         std::to_string(c) + ": " + msg);
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

    Token next() {
        skip_ws();
        Token tok;
        tok.line = line;
        tok.col = col;
        if (pos >= text.size()) {
            tok.kind = Token::End;
            return tok;
        }
        char c = text[pos];
        if (std::string("(){};,.=").find(c) != std::string::npos) {
            advance();
            tok.kind = Token::Punct;
            tok.value = std::string(1, c);
            return tok;
        }
        if (c == '?') {
            advance();
            std::string name;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
                name.push_back(text[pos]);
                advance();
            }
            if (name.empty())
                fail("empty variable name");
            tok.kind = Token::Var;
            tok.value = name;
            return tok;
        }
        if (c == '<') {
            advance();
            std::string iri;
            while (pos < text.size() && text[pos] != '>') {
                iri.push_back(text[pos]);
                advance();
            }
            if (pos >= text.size())
                fail("unterminated IRI reference");
            advance();
            tok.kind = Token::IriRef;
            tok.value = iri;
            return tok;
        }
        if (c == '"') {
            advance();
            std::string v;
            while (pos < text.size() && text[pos] != '"') {
                if (text[pos] == '\\') {
                    advance();
                    if (pos >= text.size())
                        fail("unterminated escape");
                    switch (text[pos]) {
                    case '\\': v.push_back('\\'); break;
                    case '"': v.push_back('"'); break;
                    case 'n': v.push_back('\n'); break;
                    case 'r': v.push_back('\r'); break;
                    case 't': v.push_back('\t'); break;
                    default: fail("unsupported escape in string");
                    }
                    advance();
                } else {
                    v.push_back(text[pos]);
                    advance();
                }
            }
            if (pos >= text.size())
                fail("unterminated string literal");
            advance();
            tok.kind = Token::StringLit;
            tok.value = v;
            return tok;
        }
        // word: keyword or prefixed name
        std::string word;
        while (pos < text.size()) {
            char ch = text[pos];
            if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == ':' ||
                ch == '-') {
                word.push_back(ch);
                advance();
            } else {
                break;
            }
        }
        if (word.empty())
            fail(std::string("unexpected character '") + c + "'");
        auto colon = word.find(':');
        if (colon != std::string::npos) {
            tok.kind = Token::PName;
            tok.value = word.substr(0, colon);
            tok.extra = word.substr(colon + 1);
            return tok;
        }
        tok.kind = Token::Word;
        tok.value = word;
        return tok;
    }
};

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

class QueryParser {
public:
    explicit QueryParser(std::string_view text) : lex_{text} { shift(); }

    Query parse() {
        Query q;
        std::map<std::string, std::string> prefixes;
        while (is_word("PREFIX")) {
            shift();
            if (cur_.kind != QueryLexer::Token::PName || !cur_.extra.empty())
                lex_.fail("expected 'prefix:' after PREFIX", &cur_);
            std::string name = cur_.value;
            shift();
            if (cur_.kind != QueryLexer::Token::IriRef)
                lex_.fail("expected <iri> after PREFIX", &cur_);
            prefixes[name] = cur_.value;
            shift();
        }
        prefixes_ = std::move(prefixes);

        expect_word("SELECT");
        if (is_word("DISTINCT")) {
            q.distinct = true;
            shift();
        }
        while (true) {
            if (cur_.kind == QueryLexer::Token::Var) {
                q.projection.push_back({false, cur_.value, {}});
                shift();
            } else if (is_punct("(")) {
                q.projection.push_back(parse_aggregate());
            } else {
                break;
            }
        }
        if (q.projection.empty())
            lex_.fail("SELECT needs at least one projection", &cur_);

        expect_word("WHERE");
        expect_punct("{");
        parse_group(q);
        expect_punct("}");

        if (is_word("GROUP")) {
            shift();
            expect_word("BY");
            while (cur_.kind == QueryLexer::Token::Var) {
                q.group_by.push_back(cur_.value);
                shift();
            }
            if (q.group_by.empty())
                lex_.fail("GROUP BY needs at least one variable", &cur_);
        }
        if (cur_.kind == QueryLexer::Token::Word)
            check_unsupported(cur_.value);
        if (cur_.kind != QueryLexer::Token::End)
            lex_.fail("trailing input after query", &cur_);

        validate(q);
        return q;
    }

private:
    QueryLexer lex_;
    QueryLexer::Token cur_;
    std::map<std::string, std::string> prefixes_;

    void shift() { cur_ = lex_.next(); }

    bool is_word(const char* w) const {
        return cur_.kind == QueryLexer::Token::Word && upper(cur_.value) == w;
    }
    bool is_punct(const char* p) const {
        return cur_.kind == QueryLexer::Token::Punct && cur_.value == p;
    }
    void expect_word(const char* w) {
        if (!is_word(w)) {
            if (cur_.kind == QueryLexer::Token::Word)
                check_unsupported(cur_.value);
            lex_.fail(std::string("expected ") + w, &cur_);
        }
        shift();
    }
    void expect_punct(const char* p) {
        if (!is_punct(p))
            lex_.fail(std::string("expected '") + p + "'", &cur_);
        shift();
    }

    void check_unsupported(const std::string& word) {
        std::string u = upper(word);
        for (const char* kw : kUnsupportedKeywords)
            if (u == kw)
                throw UnsupportedFeatureError("query uses unsupported construct: " + u);
    }

    Projection parse_aggregate() {
        expect_punct("(");
        if (!is_word("GROUP_CONCAT")) {
            if (cur_.kind == QueryLexer::Token::Word)
                check_unsupported(cur_.value);
            throw UnsupportedFeatureError("unsupported aggregate: " +
                                          (cur_.kind == QueryLexer::Token::Word ? cur_.value
                                                                                : "?"));
        }
        shift();
        expect_punct("(");
        if (cur_.kind != QueryLexer::Token::Var)
            lex_.fail("GROUP_CONCAT expects a variable", &cur_);
        AggregateExpr agg;
        agg.var = cur_.value;
        shift();
        if (is_punct(";")) {
            shift();
            if (!is_word("SEPARATOR"))
                lex_.fail("expected separator=\"...\"", &cur_);
            shift();
            expect_punct("=");
            if (cur_.kind != QueryLexer::Token::StringLit)
                lex_.fail("separator must be a string", &cur_);
            agg.separator = cur_.value;
            shift();
        }
        expect_punct(")");
        expect_word("AS");
        if (cur_.kind != QueryLexer::Token::Var)
            lex_.fail("expected alias variable after 'as'", &cur_);
        agg.alias = cur_.value;
        shift();
        expect_punct(")");
        return {true, "", agg};
    }

    PatternSlot parse_term_slot() {
        if (cur_.kind == QueryLexer::Token::Var) {
            auto slot = PatternSlot::variable(cur_.value);
            shift();
            return slot;
        }
        if (cur_.kind == QueryLexer::Token::IriRef) {
            auto slot = PatternSlot::ground(Iri{cur_.value, ""});
            shift();
            return slot;
        }
        if (cur_.kind == QueryLexer::Token::Word && cur_.value == "a") {
            auto slot = PatternSlot::ground(Iri{NamespaceConfig{}.type_pred, ""});
            shift();
            return slot;
        }
        if (cur_.kind == QueryLexer::Token::PName) {
            auto it = prefixes_.find(cur_.value);
            if (it == prefixes_.end())
                lex_.fail("unknown prefix '" + cur_.value + ":'", &cur_);
            auto slot = PatternSlot::ground(Iri{it->second, cur_.extra});
            shift();
            return slot;
        }
        if (cur_.kind == QueryLexer::Token::StringLit) {
            auto slot = PatternSlot::ground(Literal{cur_.value});
            shift();
            return slot;
        }
        if (cur_.kind == QueryLexer::Token::Word)
            check_unsupported(cur_.value);
        lex_.fail("expected a term or variable", &cur_);
    }

    void parse_filter(Query& q) {
        expect_punct("(");
        expect_word("STRSTARTS");
        expect_punct("(");
        expect_word("STR");
        expect_punct("(");
        if (cur_.kind != QueryLexer::Token::Var)
            lex_.fail("STR expects a variable", &cur_);
        FilterExpr f;
        f.var = cur_.value;
        shift();
        expect_punct(")");
        expect_punct(",");
        if (cur_.kind != QueryLexer::Token::StringLit)
            lex_.fail("STRSTARTS expects a string prefix", &cur_);
        f.prefix = cur_.value;
        shift();
        expect_punct(")");
        expect_punct(")");
        q.filters.push_back(std::move(f));
    }

    void parse_group(Query& q) {
        while (!is_punct("}")) {
            if (is_word("FILTER")) {
                shift();
                parse_filter(q);
                if (is_punct("."))
                    shift();
                continue;
            }
            PatternSlot subject = parse_term_slot();
            bool subject_done = false;
            while (!subject_done) {
                PatternSlot predicate = parse_term_slot();
                bool predicate_done = false;
                while (!predicate_done) {
                    PatternSlot object = parse_term_slot();
                    q.patterns.push_back({subject, predicate, object});
                    if (is_punct(",")) {
                        shift();
                    } else if (is_punct(";")) {
                        shift();
                        predicate_done = true;
                    } else {
                        predicate_done = true;
                        subject_done = true;
                        if (is_punct("."))
                            shift();
                    }
                }
            }
        }
    }

    void validate(const Query& q) const {
        std::set<std::string> pattern_vars;
        for (const auto& p : q.patterns)
            for (const auto* slot : {&p.subject, &p.predicate, &p.object})
                if (slot->is_var)
                    pattern_vars.insert(slot->var);
        auto require_in_pattern = [&](const std::string& v, const char* what) {
            if (!pattern_vars.count(v))
                throw ParseError(std::string(what) + " variable ?" + v +
                                 " does not occur in the pattern");
        };
        bool has_aggregate = false;
        for (const auto& proj : q.projection) {
            if (proj.is_aggregate) {
                has_aggregate = true;
                require_in_pattern(proj.aggregate.var, "aggregated");
            } else {
                require_in_pattern(proj.var, "projected");
            }
        }
        for (const auto& v : q.group_by)
            require_in_pattern(v, "grouped");
        for (const auto& f : q.filters)
            require_in_pattern(f.var, "filtered");
        if (has_aggregate && q.group_by.empty())
            throw ParseError("aggregates require GROUP BY");
        if (!q.group_by.empty()) {
            std::set<std::string> grouped(q.group_by.begin(), q.group_by.end());
            for (const auto& proj : q.projection)
                if (!proj.is_aggregate && !grouped.count(proj.var))
                    throw ParseError("projected variable ?" + proj.var +
                                     " must appear in GROUP BY");
        }
    }
};

std::string str_of(const Term& t) {
    if (std::holds_alternative<Iri>(t))
        return std::get<Iri>(t).full();
    return std::get<Literal>(t).value;
}

std::string aggregate_member_string(const Term& t) {
    if (std::holds_alternative<Iri>(t))
        return iri_display_name(std::get<Iri>(t).full());
    return std::get<Literal>(t).value;
}

std::string row_sort_key(const std::vector<SolutionCell>& row) {
    std::string key;
    for (const auto& cell : row) {
        key += cell.is_term ? term_key(cell.term) : ("A" + cell.text);
        key.push_back('\x1f');
    }
    return key;
}

} // namespace

Query parse_query(std::string_view text) {
    return QueryParser(text).parse();
}

SolutionTable evaluate(const Query& q, const KnowledgeGraph& g) {
    using Binding = std::map<std::string, Term>;
    std::vector<Binding> rows{Binding{}};

    for (const auto& pattern : q.patterns) {
        std::vector<Binding> next_rows;
        for (const auto& row : rows) {
            auto slot_term = [&](const PatternSlot& slot) -> std::optional<Term> {
                if (!slot.is_var)
                    return slot.term;
                auto it = row.find(slot.var);
                if (it != row.end())
                    return it->second;
                return std::nullopt;
            };
            auto s = slot_term(pattern.subject);
            auto p = slot_term(pattern.predicate);
            auto o = slot_term(pattern.object);
            for (const auto& t : g.match(s, p, o)) {
                Binding extended = row;
                bool ok = true;
                auto bind = [&](const PatternSlot& slot, const Term& value) {
                    if (!slot.is_var)
                        return;
                    auto [it, inserted] = extended.emplace(slot.var, value);
                    if (!inserted && !term_equal(it->second, value))
                        ok = false;
                };
                bind(pattern.subject, Term{t.subject});
                bind(pattern.predicate, Term{t.predicate});
                bind(pattern.object, t.object);
                if (ok)
                    next_rows.push_back(std::move(extended));
            }
        }
        rows = std::move(next_rows);
    }

    for (const auto& f : q.filters) {
        std::vector<Binding> kept;
        for (auto& row : rows) {
            auto it = row.find(f.var);
            if (it == row.end())
                continue;
            std::string s = str_of(it->second);
            if (s.rfind(f.prefix, 0) == 0)
                kept.push_back(std::move(row));
        }
        rows = std::move(kept);
    }

    SolutionTable table;
    for (const auto& proj : q.projection)
        table.columns.push_back(proj.column_name());

    if (!q.group_by.empty()) {
        std::map<std::string, std::pair<Binding, std::vector<Binding>>> groups;
        for (auto& row : rows) {
            std::string key;
            for (const auto& v : q.group_by) {
                key += term_key(row.at(v));
                key.push_back('\x1f');
            }
            auto& slot = groups[key];
            if (slot.second.empty())
                slot.first = row;
            slot.second.push_back(row);
        }
        for (auto& [key, group] : groups) {
            std::vector<SolutionCell> out_row;
            for (const auto& proj : q.projection) {
                if (proj.is_aggregate) {
                    std::vector<std::string> members;
                    for (const auto& member : group.second)
                        members.push_back(aggregate_member_string(member.at(proj.aggregate.var)));
                    std::sort(members.begin(), members.end());
                    std::string joined;
                    for (std::size_t i = 0; i < members.size(); ++i)
                        joined += (i ? proj.aggregate.separator : "") + members[i];
                    SolutionCell cell;
                    cell.is_term = false;
                    cell.text = std::move(joined);
                    out_row.push_back(std::move(cell));
                } else {
                    SolutionCell cell;
                    cell.is_term = true;
                    cell.term = group.first.at(proj.var);
                    out_row.push_back(std::move(cell));
                }
            }
            table.rows.push_back(std::move(out_row));
        }
    } else {
        for (const auto& row : rows) {
            std::vector<SolutionCell> out_row;
            for (const auto& proj : q.projection) {
                SolutionCell cell;
                cell.is_term = true;
                cell.term = row.at(proj.var);
                out_row.push_back(std::move(cell));
            }
            table.rows.push_back(std::move(out_row));
        }
    }

    std::sort(table.rows.begin(), table.rows.end(),
              [](const auto& a, const auto& b) { return row_sort_key(a) < row_sort_key(b); });
    if (q.distinct) {
        table.rows.erase(std::unique(table.rows.begin(), table.rows.end(),
                                     [](const auto& a, const auto& b) {
                                         return row_sort_key(a) == row_sort_key(b);
                                     }),
                         table.rows.end());
    }
    return table;
}

} // namespace kgqa
