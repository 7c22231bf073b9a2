#pragma once

// Minimal RFC 4180 style CSV reading/writing (quoted fields, doubled quotes,
// embedded separators and newlines inside quotes).

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace scicareer::csv {

// Reads one record; std::nullopt at end of input.
std::optional<std::vector<std::string>> read_row(std::istream& in);

std::string escape(std::string_view field);

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    template <typename... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        ((write_field(fields, first)), ...);
        out_ << '\n';
    }

    void row(const std::vector<std::string>& fields);

private:
    void write_field(std::string_view v, bool& first);
    void write_field(const std::string& v, bool& first) { write_field(std::string_view(v), first); }
    void write_field(const char* v, bool& first) { write_field(std::string_view(v), first); }
    void write_field(double v, bool& first);
    template <typename Int>
        requires std::is_integral_v<Int>
    void write_field(Int v, bool& first) {
        separator(first);
        out_ << v;
    }
    void separator(bool& first) {
        if (!first) out_ << ',';
        first = false;
    }

    std::ostream& out_;
};

// Shortest round-trippable decimal representation; "nan"/"inf" spelled out.
std::string format_double(double v);

}  // namespace scicareer::csv
