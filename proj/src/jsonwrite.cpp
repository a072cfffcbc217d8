#include "geopath/jsonwrite.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace geopath {

std::string format_double17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void JsonWriter::separator() {
    if (pending_key_) {
        pending_key_ = false;
        return;
    }
    if (!needs_comma_.empty()) {
        if (needs_comma_.back()) out_ += ',';
        needs_comma_.back() = true;
    }
}

void JsonWriter::begin_object() {
    separator();
    out_ += '{';
    needs_comma_.push_back(false);
}

void JsonWriter::end_object() {
    out_ += '}';
    needs_comma_.pop_back();
}

void JsonWriter::begin_array() {
    separator();
    out_ += '[';
    needs_comma_.push_back(false);
}

void JsonWriter::end_array() {
    out_ += ']';
    needs_comma_.pop_back();
}

void JsonWriter::key(std::string_view k) {
    separator();
    out_ += '"';
    out_ += k;
    out_ += "\":";
    pending_key_ = true;
}

void JsonWriter::value(double v) {
    separator();
    out_ += format_double17(v);
}

void JsonWriter::value(std::int64_t v) {
    separator();
    out_ += std::to_string(v);
}

void JsonWriter::value(std::uint64_t v) {
    separator();
    out_ += std::to_string(v);
}

void JsonWriter::value(bool v) {
    separator();
    out_ += v ? "true" : "false";
}

void JsonWriter::value(std::string_view v) {
    separator();
    out_ += '"';
    for (char c : v) {
        switch (c) {
            case '"': out_ += "\\\""; break;
            case '\\': out_ += "\\\\"; break;
            case '\n': out_ += "\\n"; break;
            case '\t': out_ += "\\t"; break;
            case '\r': out_ += "\\r"; break;
            default: out_ += c;
        }
    }
    out_ += '"';
}

void JsonWriter::number_array(const std::vector<double>& v) {
    begin_array();
    for (double x : v) value(x);
    end_array();
}

void JsonWriter::index_array(const std::vector<std::size_t>& v) {
    begin_array();
    for (std::size_t x : v) value(x);
    end_array();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace geopath
