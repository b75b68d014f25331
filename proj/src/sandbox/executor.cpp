#include "qforge/sandbox/executor.hpp"

#include "qforge/error.hpp"
#include "qforge/parallel.hpp"
#include "qforge/text.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace qforge::sandbox {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string_view to_string(ExecStatus status) {
    switch (status) {
    case ExecStatus::ok: return "ok";
    case ExecStatus::error: return "error";
    case ExecStatus::timeout: return "timeout";
    case ExecStatus::infra_fail: return "infra_fail";
    }
    return "infra_fail";
}

ExecStatus exec_status_from_string(std::string_view name) {
    for (auto s : {ExecStatus::ok, ExecStatus::error, ExecStatus::timeout, ExecStatus::infra_fail}) {
        if (to_string(s) == name) return s;
    }
    throw Error(ErrorCode::invalid_config, "unknown execution status '" + std::string(name) + "'");
}

void ExecutorConfig::validate() const {
    if (!(timeout_s > 0)) throw Error(ErrorCode::invalid_config, "timeout_s must be positive");
    if (grace_s < 0) throw Error(ErrorCode::invalid_config, "grace_s must be nonnegative");
    if (command.empty()) throw Error(ErrorCode::invalid_config, "runner command is empty");
    std::size_t files = 0;
    for (const auto& arg : command) files += text::count_occurrences(arg, "{file}");
    if (files != 1) throw Error(ErrorCode::invalid_config, "runner command must contain {file} exactly once");
    if (file_name.empty() || file_name.find('/') != std::string::npos) {
        throw Error(ErrorCode::invalid_config, "file_name must be a plain file name");
    }
}

void to_json(nlohmann::json& j, const ExecutorConfig& c) {
    j = {{"command", c.command},
         {"timeout_s", c.timeout_s},
         {"grace_s", c.grace_s},
         {"env_allowlist", c.env_allowlist},
         {"file_name", c.file_name},
         {"max_concurrency", c.max_concurrency}};
}

void from_json(const nlohmann::json& j, ExecutorConfig& c) {
    c.command = j.value("command", c.command);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.grace_s = j.value("grace_s", c.grace_s);
    c.env_allowlist = j.value("env_allowlist", c.env_allowlist);
    c.file_name = j.value("file_name", c.file_name);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
}

std::string cap_output(std::string text) {
    if (text.size() <= capture_limit) return text;
    // Cut on a code point boundary so the kept prefix stays valid UTF-8.
    std::size_t cut = capture_limit;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    text.resize(cut);
    text += truncation_marker;
    return text;
}

namespace {

ExecutionResult infra_fail(std::string detail) {
    ExecutionResult r;
    r.status = ExecStatus::infra_fail;
    r.infra_detail = std::move(detail);
    return r;
}

} // namespace

ExecutionResult parse_envelope(std::string_view runner_stdout) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(runner_stdout);
    } catch (const nlohmann::json::exception&) {
        return infra_fail("runner did not print a JSON envelope: " + text::tail(runner_stdout, 200));
    }
    ExecutionResult r;
    try {
        if (!j.is_object()) return infra_fail("runner envelope is not an object");
        r.status = exec_status_from_string(j.at("status").get<std::string>());
        if (j.contains("exit_code") && !j.at("exit_code").is_null()) r.exit_code = j.at("exit_code").get<int>();
        r.stdout_text = cap_output(text::base64_decode(j.at("stdout_b64").get<std::string>()));
        r.stderr_text = cap_output(text::base64_decode(j.at("stderr_b64").get<std::string>()));
        r.duration_ms = j.at("duration_ms").get<std::int64_t>();
    } catch (const std::exception& e) {
        return infra_fail(std::string("malformed runner envelope: ") + e.what());
    }
    const bool consistent = (r.status == ExecStatus::ok) == (r.exit_code == 0) &&
                            (r.status != ExecStatus::timeout || !r.exit_code) && r.duration_ms >= 0;
    if (!consistent) return infra_fail("runner envelope status and exit_code disagree");
    if (r.status == ExecStatus::infra_fail) {
        r.infra_detail = "runner reported infra_fail: " + text::tail(r.stderr_text, stderr_fallback_chars);
    }
    if (r.status == ExecStatus::error) r.parsed_error = parse_error_trace(r.stderr_text);
    return r;
}

ProcessExecutor::ProcessExecutor(ExecutorConfig config) : config_(std::move(config)) {
    config_.validate();
    const auto slots = config_.max_concurrency == 0 ? default_concurrency() : config_.max_concurrency;
    slots_ = std::make_unique<std::counting_semaphore<4096>>(static_cast<std::ptrdiff_t>(std::min<std::size_t>(slots, 4096)));
}

ExecutionResult ProcessExecutor::execute(const std::string& code) {
    slots_->acquire();
    struct Release {
        std::counting_semaphore<4096>& s;
        ~Release() { s.release(); }
    } release{*slots_};
    return run(code);
}

namespace {

std::optional<std::string> resolve_program(const std::string& name) {
    auto executable = [](const fs::path& p) { return ::access(p.c_str(), X_OK) == 0 && !fs::is_directory(p); };
    if (name.find('/') != std::string::npos) {
        if (executable(name)) return name;
        return std::nullopt;
    }
    const char* path = std::getenv("PATH");
    std::string_view dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
    while (true) {
        const auto sep = dirs.find(':');
        const std::string dir(dirs.substr(0, sep));
        const fs::path candidate = fs::path(dir.empty() ? "." : dir) / name;
        if (executable(candidate)) return candidate.string();
        if (sep == std::string_view::npos) break;
        dirs.remove_prefix(sep + 1);
    }
    return std::nullopt;
}

std::string format_seconds(double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", s);
    return buf;
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::string pattern = (fs::temp_directory_path() / "qforge-run-XXXXXX").string();
        if (!::mkdtemp(pattern.data())) throw std::runtime_error(std::string("mkdtemp: ") + std::strerror(errno));
        path = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

struct Fd {
    int fd = -1;
    ~Fd() { close(); }
    void close() {
        if (fd >= 0) ::close(fd);
        fd = -1;
    }
};

} // namespace

ExecutionResult ProcessExecutor::run(const std::string& code) {
    std::optional<TempDir> workdir;
    try {
        workdir.emplace();
        text::write_file((workdir->path / config_.file_name).string(), code);
    } catch (const std::exception& e) {
        return infra_fail(std::string("could not prepare workdir: ") + e.what());
    }
    const std::string file = (workdir->path / config_.file_name).string();

    std::vector<std::string> args;
    for (const auto& arg : config_.command) {
        args.push_back(text::replace_all(text::replace_all(arg, "{file}", file), "{timeout}",
                                         format_seconds(config_.timeout_s)));
    }
    const auto program = resolve_program(args[0]);
    if (!program) return infra_fail("runner not found: " + args[0]);

    std::vector<std::string> env;
    for (const auto& name : config_.env_allowlist) {
        if (const char* v = std::getenv(name.c_str())) env.push_back(name + "=" + v);
    }
    std::vector<char*> argv, envp;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    for (auto& e : env) envp.push_back(e.data());
    envp.push_back(nullptr);
    const std::string cwd = workdir->path.string();

    Fd out_r, out_w, err_r, err_w, exec_r, exec_w;
    int p[2];
    if (::pipe2(p, O_CLOEXEC) != 0) return infra_fail("pipe failed");
    out_r.fd = p[0], out_w.fd = p[1];
    if (::pipe2(p, O_CLOEXEC) != 0) return infra_fail("pipe failed");
    err_r.fd = p[0], err_w.fd = p[1];
    if (::pipe2(p, O_CLOEXEC) != 0) return infra_fail("pipe failed");
    exec_r.fd = p[0], exec_w.fd = p[1];

    const auto start = Clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) return infra_fail(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        // Child: only async-signal-safe calls from here on.
        ::setpgid(0, 0);
        ::dup2(out_w.fd, STDOUT_FILENO);
        ::dup2(err_w.fd, STDERR_FILENO);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        if (::chdir(cwd.c_str()) == 0) ::execve(program->c_str(), argv.data(), envp.data());
        const int err = errno;
        [[maybe_unused]] auto n = ::write(exec_w.fd, &err, sizeof err);
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    out_w.close();
    err_w.close();
    exec_w.close();

    int exec_errno = 0;
    const bool exec_failed = ::read(exec_r.fd, &exec_errno, sizeof exec_errno) == sizeof exec_errno;

    const auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(config_.timeout_s + config_.grace_s));
    std::string out, err;
    // Allows the base64 envelope of fully capped streams plus slack.
    const std::size_t envelope_limit = 4 * capture_limit;
    bool exited = false, timed_out = false;
    int wait_status = 0;
    std::optional<Clock::time_point> drain_deadline;

    auto reap = [&](int flags) {
        if (exited) return;
        const pid_t r = ::waitpid(pid, &wait_status, flags);
        if (r == pid) {
            exited = true;
            // Descendants of the runner share its process group.
            ::kill(-pid, SIGKILL);
            drain_deadline = Clock::now() + std::chrono::seconds(1);
        }
    };

    while (out_r.fd >= 0 || err_r.fd >= 0) {
        const auto now = Clock::now();
        if (!exited && now >= deadline) {
            timed_out = true;
            ::kill(-pid, SIGKILL);
            reap(0);
        }
        if (drain_deadline && now >= *drain_deadline) break;
        pollfd fds[2];
        nfds_t nfds = 0;
        if (out_r.fd >= 0) fds[nfds++] = {out_r.fd, POLLIN, 0};
        if (err_r.fd >= 0) fds[nfds++] = {err_r.fd, POLLIN, 0};
        const int rc = ::poll(fds, nfds, 20);
        if (rc < 0 && errno != EINTR) break;
        for (nfds_t i = 0; i < nfds && rc > 0; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            char buf[65536];
            const ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
            const bool is_out = fds[i].fd == out_r.fd;
            if (n <= 0) {
                (is_out ? out_r : err_r).close();
                continue;
            }
            auto& sink = is_out ? out : err;
            const std::size_t limit = is_out ? envelope_limit : capture_limit;
            if (sink.size() < limit) sink.append(buf, std::min<std::size_t>(static_cast<std::size_t>(n), limit - sink.size()));
        }
        reap(WNOHANG);
    }
    if (!exited) {
        ::kill(-pid, SIGKILL);
        reap(0);
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();

    if (exec_failed) return infra_fail("could not start runner " + *program + ": " + std::strerror(exec_errno));
    if (timed_out) {
        ExecutionResult r;
        r.status = ExecStatus::timeout;
        r.duration_ms = elapsed;
        r.stderr_text = cap_output(std::move(err));
        return r;
    }
    auto result = parse_envelope(out);
    if (result.status == ExecStatus::infra_fail && !err.empty()) {
        result.infra_detail += "; runner stderr: " + text::tail(err, 500);
    }
    // Traces name the per-run temp dir; a fixed token keeps reports reproducible.
    result.stdout_text = text::replace_all(result.stdout_text, cwd, workdir_token);
    result.stderr_text = text::replace_all(result.stderr_text, cwd, workdir_token);
    if (result.parsed_error) result.parsed_error = parse_error_trace(result.stderr_text);
    return result;
}

} // namespace qforge::sandbox
