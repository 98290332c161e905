#include "lagrange/subprocess.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace lagrange {

namespace {

bool is_executable_file(const std::string& path) {
    struct stat st {};
    if (::stat(path.c_str(), &st) != 0) return false;
    if (!S_ISREG(st.st_mode)) return false;
    return ::access(path.c_str(), X_OK) == 0;
}

}  // namespace

std::optional<std::string> find_executable(const std::string& name) {
    if (name.empty()) return std::nullopt;
    if (name.find('/') != std::string::npos) {
        if (is_executable_file(name)) return name;
        return std::nullopt;
    }
    const char* path_env = std::getenv("PATH");
    if (!path_env) return std::nullopt;
    std::stringstream ss{std::string(path_env)};
    std::string dir;
    while (std::getline(ss, dir, ':')) {
        if (dir.empty()) continue;
        std::string candidate = dir + "/" + name;
        if (is_executable_file(candidate)) return candidate;
    }
    return std::nullopt;
}

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> tokens;
    std::string cur;
    bool in_quotes = false;
    bool have_token = false;
    for (size_t i = 0; i < command.size(); ++i) {
        char c = command[i];
        if (in_quotes) {
            if (c == '\\' && i + 1 < command.size() && command[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                in_quotes = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
            have_token = true;
        } else if (c == ' ' || c == '\t' || c == '\n') {
            if (have_token || !cur.empty()) {
                tokens.push_back(cur);
                cur.clear();
                have_token = false;
            }
        } else {
            cur.push_back(c);
            have_token = true;
        }
    }
    if (have_token || !cur.empty()) tokens.push_back(cur);
    return tokens;
}

RunResult run_command(const std::vector<std::string>& argv) {
    if (argv.empty()) throw std::runtime_error("run_command: empty argv");

    int pipe_fds[2];
    if (::pipe(pipe_fds) != 0) {
        throw std::runtime_error(std::string("run_command: pipe failed: ") + std::strerror(errno));
    }

    auto start = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(pipe_fds[0]);
        ::close(pipe_fds[1]);
        throw std::runtime_error(std::string("run_command: fork failed: ") + std::strerror(errno));
    }

    if (pid == 0) {
        ::close(pipe_fds[0]);
        ::dup2(pipe_fds[1], STDOUT_FILENO);
        ::dup2(pipe_fds[1], STDERR_FILENO);
        ::close(pipe_fds[1]);
        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        ::execvp(cargv[0], cargv.data());
        // exec failed; 127 mirrors shell behaviour for missing binaries
        std::perror("execvp");
        ::_exit(127);
    }

    ::close(pipe_fds[1]);
    RunResult result;
    char buffer[4096];
    for (;;) {
        ssize_t n = ::read(pipe_fds[0], buffer, sizeof(buffer));
        if (n > 0) {
            result.output.append(buffer, static_cast<size_t>(n));
        } else if (n == 0) {
            break;
        } else if (errno != EINTR) {
            break;
        }
    }
    ::close(pipe_fds[0]);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    auto end = std::chrono::steady_clock::now();
    result.wall_time_s = std::chrono::duration<double>(end - start).count();
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

}  // namespace lagrange
