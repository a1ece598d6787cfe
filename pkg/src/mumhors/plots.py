"""Figure rendering for the simulation reports.

Kept separate from the simulators so library users never pay the matplotlib
import; the CLI calls in here after writing the delimited output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import ChannelTranscript, UtilizationReport


def render_utilization(reports: list[UtilizationReport], path: str) -> None:
    """Messages signed and bits lost against the row threshold."""
    reports = sorted(reports, key=lambda rep: rep.rt)
    rts = [rep.rt for rep in reports]
    fig, (ax_msgs, ax_lost) = plt.subplots(1, 2, figsize=(9, 3.4))

    ax_msgs.plot(rts, [rep.messages_signed for rep in reports], "o-", color="tab:blue")
    if reports:
        ax_msgs.axhline(reports[0].capacity, ls="--", lw=1, color="gray",
                        label="capacity")
        ax_msgs.legend(loc="lower right", fontsize=8)
    ax_msgs.set_xlabel("rows held (rt)")
    ax_msgs.set_ylabel("messages signed")

    ax_lost.plot(rts, [rep.bits_lost for rep in reports], "s-", color="tab:red")
    ax_lost.set_xlabel("rows held (rt)")
    ax_lost.set_ylabel("key bits lost")

    for ax in (ax_msgs, ax_lost):
        ax.grid(alpha=0.3)
    fig.suptitle(
        f"key utilization, t={reports[0].t} k={reports[0].k} r={reports[0].r}"
        if reports
        else "key utilization"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_channel(transcript: ChannelTranscript, path: str) -> None:
    """Per-message accept/reject/drop timeline for a channel run."""
    fig, ax = plt.subplots(figsize=(9, 2.6))
    style = {
        True: ("tab:green", "accepted"),
        False: ("tab:red", "rejected"),
        None: ("tab:gray", "not delivered"),
    }
    seen = set()
    for event in transcript.events:
        color, label = style[event.accepted]
        ax.scatter(
            event.ordinal,
            0,
            marker="o" if event.corruption is None else "x",
            s=60,
            color=color,
            label=label if label not in seen else None,
        )
        seen.add(label)
        if event.corruption:
            ax.annotate(
                event.corruption,
                (event.ordinal, 0),
                textcoords="offset points",
                xytext=(0, 12),
                ha="center",
                fontsize=7,
            )
    ax.set_yticks([])
    ax.set_xlabel("message ordinal")
    ax.set_title(
        f"{transcript.mode} verifier, final sync: {transcript.final_sync}"
    )
    ax.legend(loc="lower right", fontsize=8, ncol=3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
