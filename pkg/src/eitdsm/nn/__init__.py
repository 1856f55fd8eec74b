"""Neural building blocks: a small reverse-mode engine (engine), parameter
storage and checkpoints (params), and the two reconstruction networks
(fnn, cnn)."""
