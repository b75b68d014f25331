#include "qforge/backend/cassette.hpp"

#include "qforge/error.hpp"
#include "qforge/text.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>

namespace qforge::backend {

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr)) {
        throw Error(ErrorCode::io_error, "SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::string cassette_key(const CompletionRequest& request) {
    // nlohmann::json objects keep keys sorted, so dump() is canonical.
    return sha256_hex(nlohmann::json(request).dump());
}

CassetteBackend::CassetteBackend(std::shared_ptr<Backend> inner, std::string path, CassetteMode mode)
    : inner_(std::move(inner)), path_(std::move(path)), mode_(mode) {
    if (mode_ == CassetteMode::record) {
        if (!inner_) throw Error(ErrorCode::invalid_config, "record mode needs an inner backend");
        return;
    }
    std::ifstream in(path_);
    if (!in) throw Error(ErrorCode::io_error, "cannot open cassette " + path_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto record = nlohmann::json::parse(line);
            recorded_[record.at("key").get<std::string>()].push_back(record.at("response"));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::malformed_response,
                        "cassette line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

CompletionResponse CassetteBackend::complete(const CompletionRequest& request) {
    const auto key = cassette_key(request);
    if (mode_ == CassetteMode::replay) {
        std::lock_guard lock(mutex_);
        auto it = recorded_.find(key);
        if (it == recorded_.end()) throw Error(ErrorCode::cassette_miss, "no recorded response for key " + key);
        auto& cursor = cursor_[key];
        const auto& response = it->second[std::min(cursor, it->second.size() - 1)];
        ++cursor;
        auto out = response.get<CompletionResponse>();
        check_completion_count(request, out);
        return out;
    }

    auto response = inner_->complete(request);
    const nlohmann::json record = {
        {"key", key}, {"request", request}, {"response", response}, {"timestamp", utc_timestamp()}};
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error(ErrorCode::io_error, "cannot append to cassette " + path_);
    out << record.dump() << '\n';
    return response;
}

std::string CassetteBackend::id() const {
    return inner_ ? inner_->id() : std::string("cassette");
}

} // namespace qforge::backend
