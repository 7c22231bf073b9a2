#include "scicareer/csv.hpp"

#include <charconv>
#include <cmath>

namespace scicareer::csv {

std::optional<std::vector<std::string>> read_row(std::istream& in) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char ch;
    while (in.get(ch)) {
        any = true;
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            fields.push_back(std::move(field));
            return fields;
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    if (!any) return std::nullopt;
    fields.push_back(std::move(field));
    return fields;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void Writer::row(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) write_field(std::string_view(f), first);
    out_ << '\n';
}

void Writer::write_field(std::string_view v, bool& first) {
    separator(first);
    out_ << escape(v);
}

void Writer::write_field(double v, bool& first) {
    separator(first);
    out_ << format_double(v);
}

}  // namespace scicareer::csv
