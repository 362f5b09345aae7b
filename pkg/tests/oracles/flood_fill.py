"""Independent flood-fill oracle for connected-component pruning.

Recursive-style region growing over a boolean grid, written without reusing
any package code.
"""


def prune_small(texture_grid, min_blocks):
    """texture_grid: list of lists of bool. Returns pruned copy (same shape)."""
    rows = len(texture_grid)
    cols = len(texture_grid[0])
    out = [list(r) for r in texture_grid]
    visited = [[False] * cols for _ in range(rows)]
    for r in range(rows):
        for c in range(cols):
            if not texture_grid[r][c] or visited[r][c]:
                continue
            members = []
            frontier = [(r, c)]
            visited[r][c] = True
            while frontier:
                rr, cc = frontier.pop(0)
                members.append((rr, cc))
                for nr, nc in ((rr + 1, cc), (rr - 1, cc), (rr, cc + 1), (rr, cc - 1)):
                    if 0 <= nr < rows and 0 <= nc < cols and texture_grid[nr][nc] and not visited[nr][nc]:
                        visited[nr][nc] = True
                        frontier.append((nr, nc))
            if len(members) < min_blocks:
                for rr, cc in members:
                    out[rr][cc] = False
    return out
