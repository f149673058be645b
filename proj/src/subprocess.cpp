#include "tbforge/subprocess.hpp"

#include "tbforge/errors.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace tbforge::proc {

namespace {

[[noreturn]] void child_exec(const std::vector<std::string>& argv,
                             const std::optional<std::filesystem::path>& cwd, int pipe_fd) {
    setpgid(0, 0);
    dup2(pipe_fd, STDOUT_FILENO);
    dup2(pipe_fd, STDERR_FILENO);
    close(pipe_fd);
    if (cwd && chdir(cwd->c_str()) != 0) _exit(126);
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& arg : argv) cargv.push_back(const_cast<char*>(arg.c_str()));
    cargv.push_back(nullptr);
    execvp(cargv[0], cargv.data());
    _exit(127);
}

} // namespace

ExecResult run_command(const std::vector<std::string>& argv,
                       std::chrono::duration<double> timeout,
                       const std::optional<std::filesystem::path>& cwd) {
    if (argv.empty()) throw ConfigError("run_command: empty argv");

    int fds[2];
    if (pipe(fds) != 0) throw Error(std::string("pipe failed: ") + std::strerror(errno));

    auto start = std::chrono::steady_clock::now();
    pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        throw Error(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        close(fds[0]);
        child_exec(argv, cwd, fds[1]);
    }
    close(fds[1]);

    ExecResult result;
    auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(timeout);
    bool open = true;
    char buffer[4096];
    while (open) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            break;
        }
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
        struct pollfd pfd{fds[0], POLLIN, 0};
        int rc = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (rc == 0) continue;
        ssize_t n = read(fds[0], buffer, sizeof(buffer));
        if (n > 0) {
            result.output.append(buffer, static_cast<std::size_t>(n));
        } else {
            open = false;  // EOF: child closed its end
        }
    }
    // Drain whatever arrived before a timeout kill.
    if (result.timed_out) {
        int flags = fcntl(fds[0], F_GETFL, 0);
        fcntl(fds[0], F_SETFL, flags | O_NONBLOCK);
        ssize_t n;
        while ((n = read(fds[0], buffer, sizeof(buffer))) > 0) {
            result.output.append(buffer, static_cast<std::size_t>(n));
        }
    }
    close(fds[0]);

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string format_argv(const std::vector<std::string>& argv) {
    std::ostringstream out;
    out << "$";
    for (const auto& arg : argv) {
        out << ' ';
        if (arg.find_first_of(" \t\"'") != std::string::npos) {
            out << '"';
            for (char c : arg) {
                if (c == '"' || c == '\\') out << '\\';
                out << c;
            }
            out << '"';
        } else {
            out << arg;
        }
    }
    return out.str();
}

std::optional<std::filesystem::path> current_executable_dir() {
    char buffer[4096];
    ssize_t n = readlink("/proc/self/exe", buffer, sizeof(buffer) - 1);
    if (n <= 0) return std::nullopt;
    buffer[n] = '\0';
    return std::filesystem::path(buffer).parent_path();
}

std::optional<std::filesystem::path> find_in_path(const std::string& name) {
    const char* path_env = std::getenv("PATH");
    if (!path_env) return std::nullopt;
    std::istringstream in(path_env);
    std::string dir;
    while (std::getline(in, dir, ':')) {
        if (dir.empty()) continue;
        std::filesystem::path candidate = std::filesystem::path(dir) / name;
        std::error_code ec;
        if (std::filesystem::is_regular_file(candidate, ec) &&
            access(candidate.c_str(), X_OK) == 0) {
            return candidate;
        }
    }
    return std::nullopt;
}

} // namespace tbforge::proc
