import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
out = img.resize((200, 150))
