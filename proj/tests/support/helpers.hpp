#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace testsupport {

inline std::filesystem::path source_dir() {
    const char* env = std::getenv("ACTEVAL_SOURCE_DIR");
    return env ? std::filesystem::path(env) : std::filesystem::current_path();
}

inline std::filesystem::path bin_dir() {
    const char* env = std::getenv("ACTEVAL_BIN_DIR");
    return env ? std::filesystem::path(env) : std::filesystem::current_path();
}

inline std::atomic<int>& temp_counter() {
    static std::atomic<int> counter{0};
    return counter;
}

// Unique scratch directory, removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("acteval_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(temp_counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace testsupport
