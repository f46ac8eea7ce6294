import os
from PIL import Image
img = Image.open(os.environ["ORIGINAL_IMAGE_PATH"])
small = img.resize((64, 64))
small.save("thumb.png")
