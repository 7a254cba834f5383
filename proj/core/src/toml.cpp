#include "toml.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include "morphkit/error.hpp"

namespace morphkit::detail {
namespace {

using json = nlohmann::ordered_json;

class Parser {
public:
    Parser(std::string_view text, const std::string& origin) : text_(text), origin_(origin) {}

    json run() {
        json root = json::object();
        json* table = &root;
        while (true) {
            skip_blank_lines();
            if (at_end()) break;
            if (peek() == '[') {
                table = &open_table(root);
            } else {
                parse_key_value(*table);
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(origin_, line_, what); }

    bool at_end() const noexcept { return pos_ >= text_.size(); }
    char peek() const noexcept { return at_end() ? '\0' : text_[pos_]; }
    char get() {
        const char c = text_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    void skip_spaces() {
        while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#')
            while (!at_end() && peek() != '\n') ++pos_;
    }
    void skip_blank_lines() {
        while (!at_end()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\r') ++pos_;
            if (peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }
    // Inside arrays newlines and comments are whitespace.
    void skip_array_space() {
        while (!at_end()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\r' || peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }
    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (at_end()) return;
        if (peek() != '\n') fail("unexpected trailing characters");
        get();
    }

    static bool bare_char(char c) noexcept {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    }

    std::string parse_simple_key() {
        skip_spaces();
        if (peek() == '"') return parse_basic_string();
        if (peek() == '\'') return parse_literal_string();
        std::string key;
        while (!at_end() && bare_char(peek())) key.push_back(get());
        if (key.empty()) fail("expected a key");
        return key;
    }

    std::vector<std::string> parse_dotted_key() {
        std::vector<std::string> parts{parse_simple_key()};
        skip_spaces();
        while (peek() == '.') {
            get();
            parts.push_back(parse_simple_key());
            skip_spaces();
        }
        return parts;
    }

    static std::string join(const std::vector<std::string>& parts, std::size_t n) {
        std::string out;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) out += '.';
            out += parts[i];
        }
        return out;
    }

    json& descend(json& root, const std::vector<std::string>& parts, std::size_t n) {
        json* node = &root;
        for (std::size_t i = 0; i < n; ++i) {
            json& child = (*node)[parts[i]];
            if (child.is_null()) child = json::object();
            if (!child.is_object()) fail("key '" + join(parts, i + 1) + "' is not a table");
            node = &child;
        }
        return *node;
    }

    json& open_table(json& root) {
        get();  // '['
        if (peek() == '[') fail("arrays of tables are not supported");
        const auto parts = parse_dotted_key();
        skip_spaces();
        if (peek() != ']') fail("expected ']' after table name");
        get();
        const std::string name = join(parts, parts.size());
        for (const auto& seen : tables_)
            if (seen == name) fail("table '" + name + "' defined twice");
        tables_.push_back(name);
        return descend(root, parts, parts.size());
    }

    void parse_key_value(json& table) {
        const auto parts = parse_dotted_key();
        skip_spaces();
        if (peek() != '=') fail("expected '=' after key '" + join(parts, parts.size()) + "'");
        get();
        skip_spaces();
        json& parent = descend(table, parts, parts.size() - 1);
        if (parent.contains(parts.back())) fail("duplicate key '" + join(parts, parts.size()) + "'");
        parent[parts.back()] = parse_value();
    }

    json parse_value() {
        const char c = peek();
        if (c == '"') {
            if (text_.substr(pos_, 3) == "\"\"\"") fail("multi-line strings are not supported");
            return parse_basic_string();
        }
        if (c == '\'') return parse_literal_string();
        if (c == '[') return parse_array();
        if (c == '{') fail("inline tables are not supported");
        if (text_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return parse_number();
    }

    json parse_array() {
        get();  // '['
        json arr = json::array();
        skip_array_space();
        while (peek() != ']') {
            if (at_end()) fail("unterminated array");
            arr.push_back(parse_value());
            skip_array_space();
            if (peek() == ',') {
                get();
                skip_array_space();
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
        get();
        return arr;
    }

    void append_utf8(std::string& out, unsigned long cp) {
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail("invalid unicode escape");
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }

    std::string parse_basic_string() {
        get();  // '"'
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = get();
            if (c == '"') break;
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (at_end()) fail("unterminated escape");
            const char e = get();
            switch (e) {
                case 'b': out.push_back('\b'); break;
                case 't': out.push_back('\t'); break;
                case 'n': out.push_back('\n'); break;
                case 'f': out.push_back('\f'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'u':
                case 'U': {
                    const std::size_t n = e == 'u' ? 4 : 8;
                    if (pos_ + n > text_.size()) fail("truncated unicode escape");
                    unsigned long cp = 0;
                    const auto* first = text_.data() + pos_;
                    const auto [ptr, ec] = std::from_chars(first, first + n, cp, 16);
                    if (ec != std::errc{} || ptr != first + n) fail("invalid unicode escape");
                    pos_ += n;
                    append_utf8(out, cp);
                    break;
                }
                default: fail(std::string("invalid escape '\\") + e + "'");
            }
        }
        return out;
    }

    std::string parse_literal_string() {
        get();  // '\''
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = get();
            if (c == '\'') break;
            out.push_back(c);
        }
        return out;
    }

    json parse_number() {
        std::string token;
        while (!at_end()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
                token.push_back(c);
                ++pos_;
            } else {
                break;
            }
        }
        if (token.empty()) fail("expected a value");
        std::string digits;
        for (std::size_t i = 0; i < token.size(); ++i) {
            if (token[i] != '_') {
                digits.push_back(token[i]);
                continue;
            }
            const bool ok = i > 0 && i + 1 < token.size() && std::isdigit(static_cast<unsigned char>(token[i - 1])) &&
                            std::isdigit(static_cast<unsigned char>(token[i + 1]));
            if (!ok) fail("misplaced '_' in number '" + token + "'");
        }
        const std::string_view body = digits[0] == '+' || digits[0] == '-' ? std::string_view(digits).substr(1) : digits;
        if (body == "inf" || body == "nan") {
            const double v = body == "inf" ? INFINITY : NAN;
            return digits[0] == '-' ? -v : v;
        }
        const bool is_float = digits.find_first_of(".eE") != std::string::npos;
        const char* first = digits.data() + (digits[0] == '+' ? 1 : 0);
        const char* last = digits.data() + digits.size();
        if (!is_float) {
            std::int64_t v = 0;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc{} || ptr != last) fail("invalid number '" + token + "'");
            return v;
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last) fail("invalid number '" + token + "'");
        return v;
    }

    std::string_view text_;
    std::string origin_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::vector<std::string> tables_;
};

}  // namespace

nlohmann::ordered_json parse_toml(std::string_view text, const std::string& origin) {
    return Parser(text, origin).run();
}

}  // namespace morphkit::detail
