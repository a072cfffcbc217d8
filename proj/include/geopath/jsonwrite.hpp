#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace geopath {

// 17 significant digits: enough for exact double round-trips, and stable
// enough byte-wise to make rerun output trees comparable with cmp.
std::string format_double17(double v);

// Minimal streaming JSON writer. Keys are emitted in call order and doubles
// through format_double17, so the same data always serializes to the same
// bytes; nlohmann::json is used for parsing only.
class JsonWriter {
public:
    void begin_object();
    void end_object();
    void begin_array();
    void end_array();
    void key(std::string_view k);
    void value(double v);
    void value(std::int64_t v);
    void value(std::uint64_t v);
    void value(int v) { value(static_cast<std::int64_t>(v)); }
    void value(bool v);
    void value(std::string_view v);
    void value(const char* v) { value(std::string_view(v)); }
    void number_array(const std::vector<double>& v);
    void index_array(const std::vector<std::size_t>& v);

    const std::string& str() const { return out_; }

private:
    void separator();
    std::string out_;
    std::vector<bool> needs_comma_;
    bool pending_key_ = false;
};

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace geopath
