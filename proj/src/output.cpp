#include "divband/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "divband/errors.hpp"

namespace divband {

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void atomic_write(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        if (ec)
            throw IoError("cannot create directory '" +
                          target.parent_path().string() + "': " + ec.message());
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename '" + tmp.string() + "' to '" + target.string() +
                      "': " + ec.message());
    }
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows)
{
    std::string body;
    auto append_row = [&body](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) body += ',';
            body += csv_field(row[i]);
        }
        body += '\n';
    };
    append_row(header);
    for (const auto& row : rows) append_row(row);
    atomic_write(path, body);
}

} // namespace divband
